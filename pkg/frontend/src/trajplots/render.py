"""Render state-trajectory and switching-signal panels from a trajectory
CSV.

Input contract (produced by the simulation CLI): a CSV with header
``t,sigma,tau,x[0..],xhat[0..]`` and one row per uniformly spaced sample.
Rendering is read-only and headless; output is a PNG at a fixed DPI.
"""

from __future__ import annotations

import argparse
import csv
from dataclasses import dataclass

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)
import numpy as np  # noqa: E402

FIXED_COLUMNS = ("t", "sigma", "tau")
PANEL_CHOICES = ("states", "sigma", "both")
DEFAULT_DPI = 150


class SchemaMismatchError(ValueError):
    """CSV does not match the trajectory schema; names the offending column."""

    def __init__(self, column: str, message: str):
        super().__init__(f"column {column!r}: {message}")
        self.column = column


@dataclass(frozen=True)
class PlotSpec:
    """One figure: which CSV, which panels, where to write the PNG."""

    csv_path: str
    out_path: str
    panels: str = "both"
    dpi: int = DEFAULT_DPI
    state_label: str = "states"
    sigma_label: str = "switching signal"

    def __post_init__(self):
        if self.panels not in PANEL_CHOICES:
            raise ValueError(f"panels must be one of {PANEL_CHOICES}")
        if self.dpi <= 0:
            raise ValueError("dpi must be positive")


@dataclass(frozen=True)
class Trajectory:
    """Parsed CSV content."""

    t: np.ndarray
    sigma: np.ndarray
    tau: np.ndarray
    x: np.ndarray
    x_names: tuple[str, ...]

    @property
    def sigma_jump_count(self) -> int:
        """Number of switching discontinuities in the sampled record."""
        return int(np.count_nonzero(np.diff(self.sigma) != 0.0))


@dataclass(frozen=True)
class RenderResult:
    out_path: str
    panels: tuple[str, ...]
    sigma_jump_count: int
    n_samples: int
    n_state_columns: int


def load_trajectory(path) -> Trajectory:
    """Parse and validate a trajectory CSV."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaMismatchError("<header>", "file is empty") from None
        rows = list(reader)

    for i, expected in enumerate(FIXED_COLUMNS):
        got = header[i] if i < len(header) else "<missing>"
        if got != expected:
            raise SchemaMismatchError(got, f"expected {expected!r} at "
                                           f"position {i}")
    state_names = []
    for name in header[3:]:
        if not (name.startswith("x[") or name.startswith("xhat[")) \
                or not name.endswith("]"):
            raise SchemaMismatchError(name, "not a state column "
                                            "(x[i] / xhat[i])")
        state_names.append(name)
    if not state_names:
        raise SchemaMismatchError("<none>", "no state columns")
    if not rows:
        raise SchemaMismatchError("t", "no trajectory rows")

    width = len(header)
    data = np.empty((len(rows), width))
    for r, row in enumerate(rows):
        if len(row) != width:
            raise SchemaMismatchError("<row>", f"row {r + 2} has {len(row)} "
                                               f"fields, expected {width}")
        try:
            data[r] = [float(v) for v in row]
        except ValueError as exc:
            raise SchemaMismatchError("<row>", f"row {r + 2}: {exc}") from exc

    return Trajectory(t=data[:, 0], sigma=data[:, 1], tau=data[:, 2],
                      x=data[:, 3:], x_names=tuple(state_names))


def render(spec: PlotSpec) -> RenderResult:
    """Render the requested panels to a PNG and report what was drawn."""
    traj = load_trajectory(spec.csv_path)
    panels = ("states", "sigma") if spec.panels == "both" else (spec.panels,)

    fig, axes = plt.subplots(len(panels), 1, sharex=True,
                             figsize=(8.0, 3.0 * len(panels)), squeeze=False)
    axes = axes[:, 0]
    for ax, panel in zip(axes, panels):
        if panel == "states":
            # plant states only; observer columns stay available to callers
            for j, name in enumerate(traj.x_names):
                if name.startswith("x["):
                    ax.plot(traj.t, traj.x[:, j], linewidth=0.8)
            ax.set_ylabel(spec.state_label)
        else:
            ax.step(traj.t, traj.sigma, where="post", linewidth=1.0)
            ax.set_ylabel(spec.sigma_label)
            ax.set_ylim(-0.05, 1.05)
    axes[-1].set_xlabel("t")
    fig.tight_layout()
    fig.savefig(spec.out_path, dpi=spec.dpi)
    plt.close(fig)

    return RenderResult(out_path=spec.out_path, panels=panels,
                        sigma_jump_count=traj.sigma_jump_count,
                        n_samples=len(traj.t),
                        n_state_columns=traj.x.shape[1])


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(
        prog="render",
        description="Render trajectory / switching panels from a "
                    "simulation CSV.")
    ap.add_argument("--csv", required=True, help="input trajectory CSV")
    ap.add_argument("--out", required=True, help="output PNG path")
    ap.add_argument("--panels", choices=PANEL_CHOICES, default="both")
    ap.add_argument("--dpi", type=int, default=DEFAULT_DPI)
    args = ap.parse_args(argv)
    try:
        result = render(PlotSpec(csv_path=args.csv, out_path=args.out,
                                 panels=args.panels, dpi=args.dpi))
    except (SchemaMismatchError, OSError, ValueError) as exc:
        print(f"error: {exc}")
        return 2
    print(f"wrote {result.out_path} ({'+'.join(result.panels)}; "
          f"{result.sigma_jump_count} switching jumps, "
          f"{result.n_samples} samples)")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
