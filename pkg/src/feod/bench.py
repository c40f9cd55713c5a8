"""Per-element cost of tangent construction for every strategy, mode and order.

Timing runs the vectorised element loop on float lanes; operation counts
and tape high-water marks come from one pass of the same kernels on
counting scalars over a small mesh.
"""
from __future__ import annotations

import csv
import io
import time
from dataclasses import astuple, dataclass, field, fields

import numpy as np

from .assembly import DEFAULT_CHUNK, all_element_matrices, count_element_ops
from .basis import build_basis
from .mesh import build_cube_tet_mesh
from .qfunction import PLaplacianParams
from .space import build_space, gather_all, prolong_true

CSV_COLUMNS = ("order", "strategy", "mode", "time_per_element_s", "ops_per_element",
               "tape_peak_nodes", "runs", "mesh_elements")

# (strategy, mode) pairs in table column order
GRID = (("res", "reverse"), ("elm", "reverse"), ("res", "forward"), ("elm", "forward"),
        ("res", "dual"), ("elm", "dual"), ("hnd", "none"))

# published per-element reference: seconds and KFLOP, same column order as GRID
REFERENCE = {
    1: ((0.37, 0.36, 0.34, 0.45, 0.34, 0.45, 0.29), (3, 2, 4, 10, 4, 10, 2)),
    2: ((0.85, 1.57, 0.81, 3.40, 0.80, 3.31, 0.62), (43, 34, 45, 243, 46, 242, 29)),
    3: ((3.05, 11.90, 2.86, 31.48, 2.88, 30.96, 2.53), (413, 388, 419, 3925, 424, 3879, 279)),
}

MEMORY_CAP_ENTRIES = 50_000_000  # element-matrix entries held at once (float64)


@dataclass
class BenchRecord:
    order: int
    strategy: str
    mode: str
    time_per_element_s: float
    ops_per_element: int
    tape_peak_nodes: int
    runs: int
    mesh_elements: int


@dataclass
class BenchConfig:
    n: int = 16
    runs: int = 100
    orders: tuple = (1, 2, 3)
    combos: tuple = GRID
    p: float = 4.0
    eps: float = 1e-4
    seed: int = 0
    threads: int = 1
    count_n: int = 2
    chunk: int = DEFAULT_CHUNK
    memory_cap: int = MEMORY_CAP_ENTRIES
    warmup: bool = True
    extra: dict = field(default_factory=dict)

    def validate(self):
        if self.n < 1 or self.count_n < 1:
            raise ValueError("mesh sizes must be >= 1")
        if self.runs < 1:
            raise ValueError("runs must be >= 1")
        for o in self.orders:
            if o not in (1, 2, 3):
                raise ValueError(f"unsupported order {o}")
        for s, m in self.combos:
            if (s, m) not in GRID:
                raise ValueError(f"unknown strategy/mode pair {s}/{m}")
        ne = 6 * self.n ** 3
        for o in self.orders:
            nd = (o + 1) * (o + 2) * (o + 3) // 6
            if ne * nd * nd > self.memory_cap:
                raise ValueError(f"n={self.n}, order {o}: {ne} elements x {nd}^2 entries "
                                 f"exceeds the memory cap of {self.memory_cap}")
        return self


def random_state(space, rng):
    return rng.uniform(-1.0, 1.0, space.ndof_true)


def _time_assembly(space, basis, params, u, strategy, mode, runs, chunk, threads, warmup):
    if warmup:
        all_element_matrices(space, basis, params, u, strategy, mode, chunk, threads)
    total = 0.0
    for _ in range(runs):
        t0 = time.perf_counter()
        all_element_matrices(space, basis, params, u, strategy, mode, chunk, threads)
        total += time.perf_counter() - t0
    return total / (runs * space.num_elements)


def count_ops(order, strategy, mode, params, n=2, seed=0):
    """Counted ops and tape peak per element on an ``n`` cube mesh."""
    space = build_space(build_cube_tet_mesh(n), order)
    basis = build_basis(order)
    u = random_state(space, np.random.default_rng(seed))
    ue = gather_all(space, prolong_true(space, u))
    return count_element_ops(basis, params, ue, space.geometry, strategy, mode)


def run_bench(config=None, progress=None):
    cfg = (config or BenchConfig()).validate()
    params = PLaplacianParams(cfg.p, cfg.eps)
    mesh = build_cube_tet_mesh(cfg.n)
    records = []
    for order in cfg.orders:
        space = build_space(mesh, order)
        basis = build_basis(order)
        u = random_state(space, np.random.default_rng(cfg.seed))
        for strategy, mode in cfg.combos:
            t = _time_assembly(space, basis, params, u, strategy, mode, cfg.runs,
                               cfg.chunk, cfg.threads, cfg.warmup)
            ops, peak = count_ops(order, strategy, mode, params, cfg.count_n, cfg.seed)
            rec = BenchRecord(order, strategy.upper(), mode, t, int(ops),
                              int(peak) if mode == "reverse" else 0, cfg.runs,
                              space.num_elements)
            records.append(rec)
            if progress is not None:
                progress(rec)
    return records


def to_csv(records):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for r in records:
        row = list(astuple(r))
        row[3] = repr(float(row[3]))
        writer.writerow(row)
    return buf.getvalue()


def parse_csv(text):
    reader = csv.DictReader(io.StringIO(text))
    if tuple(reader.fieldnames or ()) != CSV_COLUMNS:
        raise ValueError(f"unexpected CSV header {reader.fieldnames}")
    out = []
    for row in reader:
        vals = []
        for f in fields(BenchRecord):
            v = row[f.name]
            vals.append(float(v) if f.type == "float" else int(v) if f.type == "int" else v)
        out.append(BenchRecord(*vals))
    return out


def _cell(records, order, strategy, mode):
    for r in records:
        if r.order == order and r.strategy.lower() == strategy and r.mode == mode:
            return r
    return None


def ratio(records, order, num=("elm", "forward"), den=("res", "forward"), attr="ops_per_element"):
    a, b = _cell(records, order, *num), _cell(records, order, *den)
    if a is None or b is None:
        return None
    return getattr(a, attr) / getattr(b, attr)


def to_table(records):
    head = ["", "rev RES", "rev ELM", "fwd RES", "fwd ELM", "dual RES", "dual ELM", "HND"]
    width = 10
    fmt_row = lambda cells: "".join(f"{c:>{width}}" if i else f"{c:<16}"
                                    for i, c in enumerate(cells))
    lines = [fmt_row(head)]
    for order in sorted({r.order for r in records}):
        nd = (order + 1) * (order + 2) * (order + 3) // 6
        lines.append(f"-- order {order}  K_e in R^{nd}x{nd}")
        cells = [_cell(records, order, s, m) for s, m in GRID]
        lines.append(fmt_row(["time [us]"] + [
            "-" if c is None else f"{c.time_per_element_s * 1e6:.2f}" for c in cells]))
        lines.append(fmt_row(["ops"] + ["-" if c is None else str(c.ops_per_element)
                                        for c in cells]))
        lines.append(fmt_row(["tape peak"] + [
            str(c.tape_peak_nodes) if c is not None and c.mode == "reverse" else "-"
            for c in cells]))
        if order in REFERENCE:
            ref_t, ref_k = REFERENCE[order]
            lines.append(fmt_row(["ref time [s]"] + [f"{v:.2f}" for v in ref_t]))
            lines.append(fmt_row(["ref KFLOP"] + [str(v) for v in ref_k]))
        r = ratio(records, order)
        if r is not None:
            ref = REFERENCE.get(order, (None, (0,) * 7))[1]
            lines.append(f"   ELM/RES forward ops ratio {r:.2f}  (ref {ref[3] / ref[2]:.2f})")
        t = ratio(records, order, ("res", "forward"), ("hnd", "none"), "time_per_element_s")
        if t is not None:
            lines.append(f"   forward RES time overhead vs HND {100.0 * (t - 1.0):+.1f}%")
    return "\n".join(lines) + "\n"


def report(records, fmt="csv"):
    if fmt == "csv":
        return to_csv(records)
    if fmt == "table":
        return to_table(records)
    raise ValueError(f"unknown report format {fmt!r}")
