"""CSV readers and writers for the command line and plotting exports."""
from __future__ import annotations

import csv
import io
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Iterable, Optional, Sequence

import numpy as np

from .errors import ConfigError
from .lattice import AmbiguityLattice, LatticePoints, Parallelepiped

__all__ = [
    "RunManifest",
    "fmt",
    "write_rows",
    "write_lattice_exports",
    "read_measurements",
    "write_key_values",
]


def fmt(x: Any) -> str:
    """Numbers with 12 significant digits; everything else via ``str``."""
    if isinstance(x, (float, np.floating)):
        return f"{float(x):.12g}"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return str(x)


@dataclass
class RunManifest:
    command: str
    config_path: Optional[str]
    parameters: dict[str, Any] = field(default_factory=dict)
    version: str = ""
    seed: Optional[int] = None

    def lines(self) -> list[str]:
        d = asdict(self)
        params = d.pop("parameters")
        out = [f"# {k}: {v}" for k, v in d.items()]
        out += [f"# param.{k}: {v}" for k, v in sorted(params.items())]
        return out

    def text(self) -> str:
        return "\n".join(self.lines()) + "\n"


def write_rows(
    target, header: Sequence[str], rows: Iterable[Sequence], manifest: Optional[RunManifest] = None
) -> None:
    """Write a UTF-8 CSV with optional ``#`` manifest lines before the header."""
    buf = io.StringIO()
    if manifest is not None:
        buf.write(manifest.text())
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([fmt(x) for x in r])
    if hasattr(target, "write"):
        target.write(buf.getvalue())
    else:
        Path(target).write_text(buf.getvalue(), encoding="utf-8")


def write_key_values(target, items: Iterable[tuple[str, Any]], manifest: Optional[RunManifest] = None) -> None:
    write_rows(target, ["name", "value"], items, manifest)


def write_lattice_exports(
    out_dir,
    points: LatticePoints,
    lat: AmbiguityLattice,
    manifest: Optional[RunManifest] = None,
) -> list[Path]:
    """``lattice_points.csv``, ``parallelepiped.csv`` and ``basis.csv``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = [out / "lattice_points.csv", out / "parallelepiped.csv", out / "basis.csv"]
    write_rows(paths[0], ["x", "y", "z"], points.velocities.tolist(), manifest)
    cell = Parallelepiped(origin=np.zeros(3), edges=lat.basis)
    write_rows(paths[1], ["x", "y", "z"], cell.vertices().tolist(), manifest)
    write_rows(
        paths[2], ["vector", "x", "y", "z"],
        [[f"v{i + 1}", *lat.basis[:, i].tolist()] for i in range(3)], manifest,
    )
    return paths


def read_measurements(path, L: int) -> np.ndarray:
    """Rows ``coil, point_index, re, im`` (1-based indices) -> ``coils x L``."""
    text = Path(path).read_text(encoding="utf-8")
    lines = [ln for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    reader = csv.reader(lines)
    rows = list(reader)
    if rows and rows[0] and not _is_number(rows[0][0]):
        header = [h.strip() for h in rows[0]]
        if header != ["coil", "point_index", "re", "im"]:
            raise ConfigError(f"{path}: expected header coil,point_index,re,im, got {header}")
        rows = rows[1:]
    entries: dict[tuple[int, int], complex] = {}
    try:
        for r in rows:
            c, l, re_, im_ = (x.strip() for x in r)
            key = (int(c), int(l))
            if key in entries:
                raise ConfigError(f"{path}: duplicate entry for coil {key[0]}, point {key[1]}")
            entries[key] = complex(float(re_), float(im_))
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"{path}: malformed measurement row: {exc}") from None
    coils = sorted({c for c, _ in entries})
    if not coils:
        raise ConfigError(f"{path}: no measurements")
    y = np.empty((len(coils), L), dtype=complex)
    for ci, c in enumerate(coils):
        for l in range(1, L + 1):
            if (c, l) not in entries:
                raise ConfigError(f"{path}: missing coil {c}, point {l}")
            y[ci, l - 1] = entries[(c, l)]
    if len(entries) != len(coils) * L:
        raise ConfigError(f"{path}: point indices must run 1..{L}")
    return y


def _is_number(s: str) -> bool:
    try:
        float(s)
        return True
    except ValueError:
        return False
