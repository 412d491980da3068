"""Pareto-front extraction, summary statistics, serialization, and SVG figures.

Everything here is a pure function over evaluated populations.  Floats are
serialized with repr(), the shortest decimal that round-trips, so CSV and
JSON artifacts reproduce the in-memory values bit for bit.  Figures are
self-contained static SVG: each data marker carries its source values in
data-x/data-y attributes and the root element carries the data ranges,
which keeps the geometry machine-checkable.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from xml.sax.saxutils import escape

import numpy as np

from .nsga3 import Individual, nondominated_sort
from .simulator import SpikeRecord, instantaneous_rates

_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f")


@dataclass(frozen=True)
class FrontMember:
    """One non-dominated solution; index points back into the source population."""

    index: int
    genes: tuple[float, ...]
    objectives: tuple[float, ...]


@dataclass(frozen=True)
class ParetoFront:
    """A deduplicated non-dominated set with its provenance."""

    members: tuple[FrontMember, ...]
    experiment: str = ""
    generation: int = -1
    gene_names: tuple[str, ...] = ()
    objective_names: tuple[str, ...] = ()
    metadata: dict = field(default_factory=dict)

    @property
    def n_objectives(self) -> int:
        return len(self.members[0].objectives) if self.members else len(self.objective_names)

    def objective_matrix(self) -> np.ndarray:
        return np.array([m.objectives for m in self.members])


def extract_front(
    population,
    experiment: str = "",
    generation: int = -1,
    gene_names: tuple[str, ...] = (),
    objective_names: tuple[str, ...] = (),
    metadata: dict | None = None,
) -> ParetoFront:
    """Front 0 of a population, deduplicated on identical objective vectors.

    Duplicates keep the first occurrence (population order).  Dedup
    compares exact float tuples: distinct genes mapping to the same
    objectives collapse to one representative.
    """
    population = list(population)
    if not population:
        raise ValueError("cannot extract a front from an empty population")
    F = np.array([ind.objectives for ind in population])
    front0 = nondominated_sort(F)[0]
    members = []
    seen: set[tuple[float, ...]] = set()
    for i in front0:
        objectives = tuple(float(x) for x in population[i].objectives)
        if objectives in seen:
            continue
        seen.add(objectives)
        members.append(
            FrontMember(
                index=i,
                genes=tuple(float(x) for x in population[i].genes),
                objectives=objectives,
            )
        )
    return ParetoFront(
        members=tuple(members),
        experiment=experiment,
        generation=generation,
        gene_names=tuple(gene_names),
        objective_names=tuple(objective_names),
        metadata=dict(metadata or {}),
    )


def front_summary(front: ParetoFront, epsilon: float = 1.0) -> dict:
    """Per-objective spread plus the best balanced solution.

    "Balanced" minimises the worst rate-error component (objectives named
    d_*; all components when no name matches, as in analytic problems).
    Fronts with a sparsity objective also get the sparsity distribution of
    the epsilon-best subset: members whose rate errors both lie within
    `epsilon` of the front's balanced minimum.  The subset always contains
    the balanced member itself.
    """
    if not front.members:
        raise ValueError("cannot summarise an empty front")
    F = front.objective_matrix()
    names = front.objective_names or tuple(f"objective_{k}" for k in range(F.shape[1]))
    error_cols = [k for k, nm in enumerate(names) if nm.startswith("d_")] or list(range(F.shape[1]))

    worst_error = F[:, error_cols].max(axis=1)
    balanced_pos = int(np.argmin(worst_error))
    summary = {
        "size": len(front.members),
        "experiment": front.experiment,
        "generation": front.generation,
        "objective_names": list(names),
        "min": [float(x) for x in F.min(axis=0)],
        "median": [float(x) for x in np.median(F, axis=0)],
        "max": [float(x) for x in F.max(axis=0)],
        "balanced_error": float(worst_error[balanced_pos]),
        "balanced_member": {
            "index": front.members[balanced_pos].index,
            "genes": list(front.members[balanced_pos].genes),
            "objectives": list(front.members[balanced_pos].objectives),
        },
    }

    if "sparsity" in names:
        s_col = names.index("sparsity")
        # worst_error <= b* + eps bounds every rate error by b* + eps at once
        eps_mask = worst_error <= worst_error[balanced_pos] + epsilon
        sparsities = F[eps_mask, s_col]
        summary["epsilon"] = epsilon
        summary["eps_best_sparsity"] = {
            "count": int(eps_mask.sum()),
            "min": float(sparsities.min()),
            "median": float(np.median(sparsities)),
            "max": float(sparsities.max()),
        }
    return summary


def export_front(front: ParetoFront, path, format: str = "csv") -> None:
    """Write a front as CSV (rows) or JSON (self-describing, with metadata)."""
    if format == "csv":
        header = ["experiment", "generation", "index", *front.gene_names, *front.objective_names]
        with open(path, "w", newline="") as fh:
            fh.write(",".join(header) + "\n")
            for m in front.members:
                cells = [front.experiment, str(front.generation), str(m.index)]
                cells += [repr(g) for g in m.genes]
                cells += [repr(o) for o in m.objectives]
                fh.write(",".join(cells) + "\n")
    elif format == "json":
        payload = {
            "experiment": front.experiment,
            "generation": front.generation,
            "gene_names": list(front.gene_names),
            "objective_names": list(front.objective_names),
            "metadata": front.metadata,
            "members": [
                {"index": m.index, "genes": list(m.genes), "objectives": list(m.objectives)}
                for m in front.members
            ],
        }
        with open(path, "w") as fh:
            json.dump(payload, fh, indent=2)
            fh.write("\n")
    else:
        raise ValueError(f"unknown export format {format!r}")


def load_front_json(path) -> ParetoFront:
    with open(path) as fh:
        payload = json.load(fh)
    return ParetoFront(
        members=tuple(
            FrontMember(
                index=int(m["index"]),
                genes=tuple(float(g) for g in m["genes"]),
                objectives=tuple(float(o) for o in m["objectives"]),
            )
            for m in payload["members"]
        ),
        experiment=payload["experiment"],
        generation=int(payload["generation"]),
        gene_names=tuple(payload["gene_names"]),
        objective_names=tuple(payload["objective_names"]),
        metadata=payload["metadata"],
    )


def load_front_csv(path, n_genes: int) -> ParetoFront:
    """Parse an exported front CSV; the gene/objective column split is n_genes."""
    with open(path, newline="") as fh:
        header = fh.readline().rstrip("\n").split(",")
        gene_names = tuple(header[3 : 3 + n_genes])
        objective_names = tuple(header[3 + n_genes :])
        members = []
        experiment, generation = "", -1
        for line in fh:
            cells = line.rstrip("\n").split(",")
            experiment, generation = cells[0], int(cells[1])
            members.append(
                FrontMember(
                    index=int(cells[2]),
                    genes=tuple(float(x) for x in cells[3 : 3 + n_genes]),
                    objectives=tuple(float(x) for x in cells[3 + n_genes :]),
                )
            )
    return ParetoFront(
        members=tuple(members),
        experiment=experiment,
        generation=generation,
        gene_names=gene_names,
        objective_names=objective_names,
    )


def load_population_csv(path, gene_names, objective_names) -> list[list[Individual]]:
    """Read a per-generation population CSV back into Individual lists."""
    n_genes = len(gene_names)
    generations: dict[int, list[Individual]] = {}
    with open(path, newline="") as fh:
        header = fh.readline().rstrip("\n").split(",")
        expected = ["generation", "index", "rank", *gene_names, *objective_names]
        if header != expected:
            raise ValueError(f"population CSV header {header} != expected {expected}")
        for line in fh:
            cells = line.rstrip("\n").split(",")
            gen, _idx, rank = int(cells[0]), int(cells[1]), int(cells[2])
            genes = np.array([float(x) for x in cells[3 : 3 + n_genes]])
            objectives = np.array([float(x) for x in cells[3 + n_genes :]])
            generations.setdefault(gen, []).append(
                Individual(genes=genes, objectives=objectives, rank=rank)
            )
    return [generations[g] for g in sorted(generations)]


# --- SVG figures -----------------------------------------------------------

_W, _H = 640, 480
_MARGIN = {"left": 64, "right": 150, "top": 36, "bottom": 52}


def _pad_range(lo: float, hi: float) -> tuple[float, float]:
    span = hi - lo
    pad = 0.05 * span if span > 0 else max(0.05 * abs(hi), 0.5)
    return lo - pad, hi + pad


def _axis_label(name: str) -> str:
    return f"{name} (Hz)" if name.startswith("d_") else name


def _f_color(value: float) -> str:
    """Two-segment gradient (dark violet, teal, yellow) over [0, 1]."""
    anchors = [(0.0, (68, 1, 84)), (0.5, (33, 145, 140)), (1.0, (253, 231, 37))]
    t = min(max(value, 0.0), 1.0)
    for (t0, c0), (t1, c1) in zip(anchors, anchors[1:]):
        if t <= t1:
            w = 0.0 if t1 == t0 else (t - t0) / (t1 - t0)
            rgb = tuple(round(a + w * (b - a)) for a, b in zip(c0, c1))
            return "#{:02x}{:02x}{:02x}".format(*rgb)
    return "#fde725"


def _ticks(lo: float, hi: float, count: int = 5) -> list[float]:
    return [lo + k * (hi - lo) / (count - 1) for k in range(count)]


def _fmt_tick(x: float) -> str:
    return f"{x:.4g}"


def render_front_plot(fronts, path, title: str = "") -> None:
    """Scatter one or more fronts into a static SVG.

    Two-objective fronts colour by front; three-objective fronts place the
    first two objectives on the axes and colour markers by the third
    (sparsity), with the front identity in the marker outline and legend.
    The root element records the padded data ranges as data-* attributes.
    """
    fronts = list(fronts)
    if not fronts:
        raise ValueError("need at least one front to plot")
    dims = {f.n_objectives for f in fronts}
    if len(dims) != 1:
        raise ValueError(f"fronts mix objective dimensionalities: {sorted(dims)}")
    (n_obj,) = dims
    if n_obj < 2:
        raise ValueError("fronts need at least two objectives to plot")

    xs = [m.objectives[0] for f in fronts for m in f.members]
    ys = [m.objectives[1] for f in fronts for m in f.members]
    xmin, xmax = _pad_range(min(xs), max(xs))
    ymin, ymax = _pad_range(min(ys), max(ys))

    px0, px1 = _MARGIN["left"], _W - _MARGIN["right"]
    py0, py1 = _H - _MARGIN["bottom"], _MARGIN["top"]  # y grows upward

    def sx(x: float) -> float:
        return px0 + (x - xmin) / (xmax - xmin) * (px1 - px0)

    def sy(y: float) -> float:
        return py0 + (y - ymin) / (ymax - ymin) * (py1 - py0)

    names = next((f.objective_names for f in fronts if f.objective_names), None)
    names = names or tuple(f"objective_{k}" for k in range(n_obj))

    out = []
    out.append(
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
        f'viewBox="0 0 {_W} {_H}" data-xmin="{xmin!r}" data-xmax="{xmax!r}" '
        f'data-ymin="{ymin!r}" data-ymax="{ymax!r}">'
    )
    out.append(f'<rect width="{_W}" height="{_H}" fill="white"/>')
    if title:
        out.append(
            f'<text x="{(px0 + px1) / 2}" y="22" text-anchor="middle" '
            f'font-family="sans-serif" font-size="14">{escape(title)}</text>'
        )

    for x in _ticks(xmin, xmax):
        out.append(
            f'<line x1="{sx(x):.2f}" y1="{py0}" x2="{sx(x):.2f}" y2="{py0 + 5}" stroke="black"/>'
        )
        out.append(
            f'<text x="{sx(x):.2f}" y="{py0 + 18}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="11">{_fmt_tick(x)}</text>'
        )
    for y in _ticks(ymin, ymax):
        out.append(
            f'<line x1="{px0 - 5}" y1="{sy(y):.2f}" x2="{px0}" y2="{sy(y):.2f}" stroke="black"/>'
        )
        out.append(
            f'<text x="{px0 - 8}" y="{sy(y) + 4:.2f}" text-anchor="end" '
            f'font-family="sans-serif" font-size="11">{_fmt_tick(y)}</text>'
        )
    out.append(f'<rect x="{px0}" y="{py1}" width="{px1 - px0}" height="{py0 - py1}" fill="none" stroke="black"/>')
    out.append(
        f'<text x="{(px0 + px1) / 2}" y="{_H - 14}" text-anchor="middle" '
        f'font-family="sans-serif" font-size="13">{escape(_axis_label(names[0]))}</text>'
    )
    out.append(
        f'<text x="18" y="{(py0 + py1) / 2}" text-anchor="middle" font-family="sans-serif" '
        f'font-size="13" transform="rotate(-90 18 {(py0 + py1) / 2})">{escape(_axis_label(names[1]))}</text>'
    )

    for fi, front in enumerate(fronts):
        base = _PALETTE[fi % len(_PALETTE)]
        for m in front.members:
            if n_obj >= 3:
                fill = _f_color(m.objectives[2])
                stroke = base
            else:
                fill = base
                stroke = "none"
            out.append(
                f'<circle class="pt" cx="{sx(m.objectives[0]):.2f}" cy="{sy(m.objectives[1]):.2f}" '
                f'r="4" fill="{fill}" stroke="{stroke}" '
                f'data-x="{m.objectives[0]!r}" data-y="{m.objectives[1]!r}"/>'
            )

    lx = px1 + 12
    for fi, front in enumerate(fronts):
        base = _PALETTE[fi % len(_PALETTE)]
        label = front.metadata.get("label") or front.experiment or f"front {fi}"
        ly = py1 + 10 + 18 * fi
        out.append(f'<circle cx="{lx + 5}" cy="{ly}" r="4" fill="{base}"/>')
        out.append(
            f'<text class="legend" x="{lx + 14}" y="{ly + 4}" font-family="sans-serif" '
            f'font-size="11">{escape(str(label))}</text>'
        )
    if n_obj >= 3:
        ly = py1 + 10 + 18 * len(fronts) + 8
        out.append(
            f'<text x="{lx}" y="{ly + 4}" font-family="sans-serif" font-size="11">'
            f"{escape(_axis_label(names[2]))}: dark=0, light=1</text>"
        )

    out.append("</svg>")
    with open(path, "w") as fh:
        fh.write("\n".join(out) + "\n")


def render_activity_plot(record: SpikeRecord, path, bin_ticks: int = 1, title: str = "") -> None:
    """Raster over time (top) and whole-population rate series (bottom)."""
    W, H = 720, 540
    left, right = 58, 20
    raster_top, raster_h, gap, rate_h, bottom = 34, 320, 40, 100, 36
    px0, px1 = left, W - right
    duration = max(record.duration, 1)

    def sx(t: float) -> float:
        return px0 + t / duration * (px1 - px0)

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">',
        f'<rect width="{W}" height="{H}" fill="white"/>',
    ]
    if title:
        out.append(
            f'<text x="{W / 2}" y="20" text-anchor="middle" font-family="sans-serif" '
            f'font-size="14">{escape(title)}</text>'
        )

    def sy_raster(i: int) -> float:
        return raster_top + (1.0 - (i + 0.5) / record.n) * raster_h

    for t, i in zip(record.ticks.tolist(), record.neurons.tolist()):
        color = "#1f77b4" if i < record.n_exc else "#d62728"
        out.append(
            f'<rect class="spike" x="{sx(t):.2f}" y="{sy_raster(i):.2f}" width="1.2" height="1.2" fill="{color}"/>'
        )
    out.append(
        f'<rect x="{px0}" y="{raster_top}" width="{px1 - px0}" height="{raster_h}" fill="none" stroke="black"/>'
    )
    out.append(
        f'<text x="16" y="{raster_top + raster_h / 2}" text-anchor="middle" font-family="sans-serif" '
        f'font-size="12" transform="rotate(-90 16 {raster_top + raster_h / 2})">neuron</text>'
    )

    series = instantaneous_rates(record, bin_ticks)
    rates = series["r_all"]
    r_top = raster_top + raster_h + gap
    r_max = float(rates.max()) if rates.size and rates.max() > 0 else 1.0

    def sy_rate(r: float) -> float:
        return r_top + (1.0 - r / r_max) * rate_h

    points = " ".join(
        f"{sx(float(series['bin_start_ms'][k]) + bin_ticks / 2):.2f},{sy_rate(float(rates[k])):.2f}"
        for k in range(rates.size)
    )
    out.append(f'<polyline points="{points}" fill="none" stroke="#2ca02c" stroke-width="1"/>')
    out.append(
        f'<rect x="{px0}" y="{r_top}" width="{px1 - px0}" height="{rate_h}" fill="none" stroke="black"/>'
    )
    out.append(
        f'<text x="16" y="{r_top + rate_h / 2}" text-anchor="middle" font-family="sans-serif" '
        f'font-size="12" transform="rotate(-90 16 {r_top + rate_h / 2})">rate (Hz)</text>'
    )
    out.append(
        f'<text x="{(px0 + px1) / 2}" y="{H - 10}" text-anchor="middle" font-family="sans-serif" '
        f'font-size="12">time (ms)</text>'
    )
    for t in _ticks(0, duration):
        out.append(
            f'<text x="{sx(t):.2f}" y="{r_top + rate_h + 16}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="10">{_fmt_tick(t)}</text>'
        )
    out.append(f'<text x="{px1 - 4}" y="{r_top - 6}" text-anchor="end" font-family="sans-serif" font-size="10">peak {r_max:.3g} Hz</text>')
    out.append("</svg>")
    with open(path, "w") as fh:
        fh.write("\n".join(out) + "\n")
