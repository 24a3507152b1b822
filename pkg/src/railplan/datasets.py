"""Access to the instance files shipped with the package."""

from importlib import resources

from .instancefile import parse_instance
from .model import Instance

SHIPPED = ("satt-small", "satt-return")


def shipped_instance_text(name: str = "satt-small") -> str:
    if name not in SHIPPED:
        raise KeyError(f"unknown shipped instance {name!r}; have {SHIPPED}")
    return resources.files("railplan").joinpath(f"data/{name}").read_text("utf-8")


def shipped_instance(name: str = "satt-small") -> Instance:
    return parse_instance(shipped_instance_text(name), name=name)
