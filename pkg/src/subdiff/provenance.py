"""Reproducibility headers for every file the package writes.

Each output file (CSV or JSON sidecar) starts with comment lines naming the
package version, the producing command or function, the parameters of the
run, and the numerical tolerances in force.  Headers carry no timestamps or
host information so identical runs produce bit-identical files.
"""
from __future__ import annotations

from collections.abc import Iterable, Mapping

from ._version import __version__

__all__ = ["format_value", "reproducibility_header"]


def format_value(value: object) -> str:
    """Render a parameter value deterministically for a header line."""
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (list, tuple)):
        return ",".join(format_value(v) for v in value)
    return str(value)


def reproducibility_header(
    kind: str,
    parameters: Mapping[str, object] | None = None,
    tolerances: Mapping[str, object] | None = None,
    extra: Iterable[str] = (),
) -> list[str]:
    """Build the comment block that opens an output file.

    ``kind`` names what the file holds (e.g. ``solution-snapshot``).  All
    lines start with ``#`` so CSV readers can skip them.
    """
    lines = [f"# subdiff {__version__} {kind}"]
    for key, value in (parameters or {}).items():
        lines.append(f"# {key} = {format_value(value)}")
    for key, value in (tolerances or {}).items():
        lines.append(f"# tolerance:{key} = {format_value(value)}")
    lines.extend(extra)
    return lines
