"""Signal tables and description loading (include resolution)."""

from __future__ import annotations

import os
from pathlib import Path

from .ast import Description
from .diagnostics import Diagnostic, SourceError, Span, error, warning
from .dimensions import (
    DIMENSIONLESS,
    Dimension,
    SignalLookup,
    base_dimension,
    evaluate_unit,
)
from .parser import parse_only, validate_description

# Environment variable holding extra include search directories,
# os.pathsep-separated.
SIGNAL_PATH_ENV = "FUSEGEN_SIGNAL_PATH"

MAX_INCLUDE_DEPTH = 8


def builtin_signals() -> SignalLookup:
    """The fallback signal table available even without any include file:
    the seven SI base signals plus common derived ones."""
    length = base_dimension("length")
    mass = base_dimension("mass")
    time = base_dimension("time")
    table = SignalLookup(
        {
            "length": length,
            "mass": mass,
            "time": time,
            "current": base_dimension("current"),
            "temperature": base_dimension("temperature"),
            "amount": base_dimension("amount"),
            "luminosity": base_dimension("luminosity"),
            "dimensionless": DIMENSIONLESS,
            "angle": DIMENSIONLESS,
            "distance": length,
            "area": length.power(2),
            "volume": length.power(3),
            "speed": length / time,
            "velocity": length / time,
            "acceleration": length / time.power(2),
            # Jerk-free acceleration unit used by pendulum descriptions;
            # dimensionally plain acceleration.
            "ajf": length / time.power(2),
            "angularRate": DIMENSIONLESS / time,
            "angularAcceleration": DIMENSIONLESS / time.power(2),
            "frequency": DIMENSIONLESS / time,
            "force": mass * length / time.power(2),
        }
    )
    return table


def build_signal_table(desc: Description) -> tuple[SignalLookup, list[Diagnostic]]:
    """Built-in table extended with the description's signal declarations,
    in order, so later declarations may use earlier ones."""
    table = builtin_signals()
    diags: list[Diagnostic] = []
    for sig in desc.signals:
        dim = evaluate_unit(sig.definition, table, desc.source_name, diags)
        if dim is not None:
            table.define(sig.name, dim)
    return table, diags


class IncludeResolver:
    """Finds include files by name on a search path.

    Explicitly provided sources (for callers without a filesystem, like
    the HTTP service) take precedence over the search path.
    """

    def __init__(
        self,
        search_paths: list[str] | None = None,
        sources: dict[str, str] | None = None,
        use_env: bool = True,
    ):
        self.search_paths = list(search_paths or [])
        if use_env:
            env = os.environ.get(SIGNAL_PATH_ENV, "")
            self.search_paths.extend(p for p in env.split(os.pathsep) if p)
        self.sources = dict(sources or {})

    def resolve(self, name: str) -> tuple[str, str] | None:
        """Return (source text, display name) or None if not found."""
        if name in self.sources:
            return self.sources[name], name
        for directory in self.search_paths:
            candidate = Path(directory) / name
            if candidate.is_file():
                return candidate.read_text(), str(candidate)
        return None


def load_description_text(
    source: str,
    filename: str = "<input>",
    resolver: IncludeResolver | None = None,
) -> tuple[Description, list[Diagnostic]]:
    """Parse *source*, pull in its includes, and validate the result.

    Includes contribute signal and constant declarations; a missing
    include only produces a warning because the built-in signal table
    covers the base signals.  Returns the merged description and the
    warnings; raises SourceError if validation fails.
    """
    resolver = resolver or IncludeResolver()
    warnings: list[Diagnostic] = []
    main = parse_only(source, filename)

    merged_signals = []
    merged_constants = []
    visited: set[str] = set()

    def pull(desc: Description, depth: int) -> None:
        for name in desc.includes:
            if name in visited:
                continue
            visited.add(name)
            if depth >= MAX_INCLUDE_DEPTH:
                raise SourceError(
                    [
                        error(
                            f"include depth exceeds {MAX_INCLUDE_DEPTH} at '{name}'",
                            desc.source_name,
                            Span(0, 0, 1, 1),
                        )
                    ]
                )
            found = resolver.resolve(name)
            if found is None:
                warnings.append(
                    warning(
                        f"include '{name}' not found; relying on built-in signals",
                        desc.source_name,
                        Span(0, 0, 1, 1),
                    )
                )
                continue
            text, display = found
            included = parse_only(text, display)
            pull(included, depth + 1)
            merged_signals.extend(included.signals)
            merged_constants.extend(included.constants)

    pull(main, 0)
    main.signals = merged_signals + main.signals
    main.constants = merged_constants + main.constants

    diags = validate_description(main)
    if any(d.severity == "error" for d in diags):
        raise SourceError(diags)
    warnings.extend(diags)
    return main, warnings


def load_description(
    path: str | Path,
    search_paths: list[str] | None = None,
    use_env: bool = True,
) -> tuple[Description, list[Diagnostic]]:
    """Load a description from a file; includes are searched for first in
    the file's own directory, then on the given search path, then in the
    directories named by the FUSEGEN_SIGNAL_PATH environment variable."""
    path = Path(path)
    dirs = [str(path.parent)] + list(search_paths or [])
    resolver = IncludeResolver(dirs, use_env=use_env)
    return load_description_text(path.read_text(), str(path), resolver)


def collect_include_sources(
    source: str,
    filename: str,
    search_paths: list[str] | None = None,
    use_env: bool = True,
) -> dict[str, str]:
    """Gather the text of every include reachable from *source*, keyed by
    include name, so a description can be shipped to the service as a
    self-contained bundle.  Unresolvable includes are simply omitted."""
    resolver = IncludeResolver(search_paths, use_env=use_env)
    collected: dict[str, str] = {}
    visited: set[str] = set()

    def walk(desc: Description) -> None:
        for name in desc.includes:
            if name in visited:
                continue
            visited.add(name)
            found = resolver.resolve(name)
            if found is None:
                continue
            text, display = found
            collected[name] = text
            walk(parse_only(text, display))

    walk(parse_only(source, filename))
    return collected
