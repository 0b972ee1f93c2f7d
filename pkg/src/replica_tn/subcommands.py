"""Subcommand decorator and registry for the ``replica-tn`` command line."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable


@dataclass
class Argument:
    """One ``argparse`` argument: positional flags plus keyword options."""

    flags: tuple[str, ...]
    options: dict[str, Any] = field(default_factory=dict)


@dataclass
class Subcommand:
    """A subcommand registered via the @subcommand decorator.

    ``handler(manifest, config, on_layer)`` computes every requested depth of
    one chain length and returns the result rows.
    """

    name: str
    description: str
    arguments: list[Argument]
    handler: Callable[..., list[dict[str, Any]]]
    extra_columns: tuple[str, ...] = ()


def arg(*flags: str, **options: Any) -> Argument:
    return Argument(flags, options)


def subcommand(
    name: str,
    description: str,
    arguments: list[Argument] | None = None,
    extra_columns: tuple[str, ...] = (),
) -> Callable[[Callable[..., list[dict[str, Any]]]], Subcommand]:
    """Decorator to register a subcommand handler.

    Usage::

        @subcommand("ipr", "Averaged inverse participation ratio", [arg("--k", type=int, default=2)])
        def run_ipr(manifest, config, on_layer):
            ...
    """

    def decorator(fn: Callable[..., list[dict[str, Any]]]) -> Subcommand:
        command = Subcommand(
            name=name,
            description=description,
            arguments=list(arguments or []),
            handler=fn,
            extra_columns=tuple(extra_columns),
        )
        _SUBCOMMANDS[name] = command
        return command

    return decorator


def get_subcommand(name: str) -> Subcommand | None:
    return _SUBCOMMANDS.get(name)


def list_subcommands() -> dict[str, Subcommand]:
    return dict(_SUBCOMMANDS)


# Global registry, populated when replica_tn.cli is imported
_SUBCOMMANDS: dict[str, Subcommand] = {}
