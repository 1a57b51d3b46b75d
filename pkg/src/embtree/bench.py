"""I/O-count benchmarks and the ``bench`` command line.

Every report is a list of cumulative counter rows sampled every
``report_interval`` operations, written as CSV with the columns::

    records,reads,writes,hits,misses,height,meta_writes[,sim_ms]

``reads``/``writes`` count node pages only; metadata page writes are in
``meta_writes``.  ``sim_ms`` appears with simulated SD latency enabled.
"""

from __future__ import annotations

import argparse
import csv
import io
import os
import random
import sys
from dataclasses import dataclass, field

from .btree import BTree, MAX_KEY
from .errors import BTreeError
from .page_format import PageConfig
from .seqfile import SequentialFile
from .storage import FileStore, MemoryStore, PageStore

CSV_COLUMNS = ("records", "reads", "writes", "hits", "misses", "height", "meta_writes")


@dataclass
class WorkloadSpec:
    n_records: int = 10_000
    key_order: str = "random"
    seed: int = 0
    buffers: int = 2
    page_size: int = 512
    record_size: int = 16
    report_interval: int = 1000
    simulate_latency: bool = False

    def __post_init__(self):
        if self.n_records < 0:
            raise ValueError("n_records must be >= 0")
        if self.key_order not in ("random", "seq"):
            raise ValueError(f"key_order must be 'random' or 'seq', got {self.key_order!r}")
        if self.report_interval < 1:
            raise ValueError("report_interval must be >= 1")

    @property
    def cfg(self) -> PageConfig:
        return PageConfig(self.page_size, self.record_size)

    def new_store(self, path=None) -> PageStore:
        cls = MemoryStore if path is None else FileStore
        args = (self.page_size,) if path is None else (path, self.page_size)
        if self.simulate_latency:
            return cls.with_sd_latency(*args)
        return cls(*args)


@dataclass
class BenchRow:
    records: int
    reads: int
    writes: int
    hits: int
    misses: int
    height: int
    meta_writes: int
    sim_ms: float | None = None


@dataclass
class BenchReport:
    label: str
    rows: list[BenchRow] = field(default_factory=list)

    @property
    def final(self) -> BenchRow | None:
        return self.rows[-1] if self.rows else None

    def write_csv(self, fh) -> None:
        with_sim = any(r.sim_ms is not None for r in self.rows)
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_COLUMNS + (("sim_ms",) if with_sim else ()))
        for r in self.rows:
            row = [r.records, r.reads, r.writes, r.hits, r.misses, r.height, r.meta_writes]
            if with_sim:
                row.append(f"{r.sim_ms:.3f}")
            w.writerow(row)

    def to_csv(self) -> str:
        buf = io.StringIO()
        self.write_csv(buf)
        return buf.getvalue()


def generate_keys(spec: WorkloadSpec) -> list[int]:
    """Unique keys: a seeded sample of the 32-bit space, or 0..n-1 in order."""
    if spec.key_order == "seq":
        return list(range(spec.n_records))
    return random.Random(spec.seed).sample(range(MAX_KEY + 1), spec.n_records)


def make_value(key: int, size: int) -> bytes:
    return (key.to_bytes(4, "little") * (size // 4 + 1))[:size]


class _Meter:
    """Counter deltas relative to the moment it was started."""

    def __init__(self, store: PageStore, tree: BTree | None = None):
        self.store = store
        self.tree = tree
        self.io0 = store.counters.snapshot()
        self.sim0 = store.sim_time_us
        pool = tree.pool if tree is not None else None
        self.hits0 = pool.hits if pool else 0
        self.misses0 = pool.misses if pool else 0

    def row(self, records: int, simulate: bool) -> BenchRow:
        io_ = self.store.counters - self.io0
        pool = self.tree.pool if self.tree is not None else None
        return BenchRow(
            records=records,
            reads=io_.reads,
            writes=io_.writes,
            hits=(pool.hits - self.hits0) if pool else 0,
            misses=(pool.misses - self.misses0) if pool else io_.reads,
            height=self.tree.height if self.tree is not None else 0,
            meta_writes=io_.meta_writes,
            sim_ms=(self.store.sim_time_us - self.sim0) / 1000.0 if simulate else None,
        )


def _sample(i: int, n: int, interval: int) -> bool:
    return i % interval == 0 or i == n


def bench_insert(spec: WorkloadSpec, store: PageStore | None = None,
                 keys: list[int] | None = None) -> tuple[BenchReport, BTree]:
    """Insert ``spec.n_records`` records into a fresh tree, sampling counters."""
    if spec.n_records < 1:
        raise ValueError("insert benchmark needs at least one record")
    store = store if store is not None else spec.new_store()
    keys = keys if keys is not None else generate_keys(spec)
    tree = BTree.create(store, spec.cfg, buffers=spec.buffers)
    meter = _Meter(store, tree)
    report = BenchReport(f"insert M={spec.buffers}")
    vs = spec.cfg.value_size
    n = len(keys)
    for i, key in enumerate(keys, 1):
        tree.put(key, make_value(key, vs))
        if _sample(i, n, spec.report_interval):
            report.rows.append(meter.row(i, spec.simulate_latency))
    return report, tree


def bench_query(spec: WorkloadSpec, tree: BTree, keys: list[int] | None = None) -> BenchReport:
    """Look up ``spec.n_records`` random existing keys (drawn with replacement).

    Starts from a cold cache so the counts do not depend on what ran before.
    """
    if keys is None:
        keys = [k for k, _ in tree.items()]
    tree.pool.invalidate()
    report = BenchReport(f"query M={tree.pool.num_frames}")
    n = spec.n_records
    if n == 0:
        return report
    if not keys:
        raise ValueError("cannot query an empty tree")
    rng = random.Random(spec.seed + 1)
    meter = _Meter(tree.store, tree)
    for i in range(1, n + 1):
        key = keys[rng.randrange(len(keys))]
        if tree.get(key) is None:
            raise BTreeError(f"key {key} missing from tree")
        if _sample(i, n, spec.report_interval):
            report.rows.append(meter.row(i, spec.simulate_latency))
    return report


def bench_sweep(spec: WorkloadSpec, buffers=range(2, 9)) -> dict[int, tuple[BenchReport, BenchReport]]:
    """Insert + query runs on identical keys for each buffer count."""
    keys = generate_keys(spec)
    out = {}
    for m in buffers:
        s = WorkloadSpec(**{**spec.__dict__, "buffers": m})
        ins, tree = bench_insert(s, keys=keys)
        out[m] = (ins, bench_query(s, tree, keys))
    return out


@dataclass
class SeqFileResult:
    report: BenchReport
    data_pages: int
    mean_reads: float


def bench_seqfile(spec: WorkloadSpec, n_queries: int | None = None) -> SeqFileResult:
    """Build an unindexed record file and answer random point queries by scanning."""
    store = spec.new_store()
    sf = SequentialFile(store, spec.cfg)
    keys = generate_keys(spec)
    vs = spec.cfg.value_size
    for key in keys:
        sf.append(key, make_value(key, vs))
    n_queries = spec.n_records if n_queries is None else n_queries
    rng = random.Random(spec.seed + 1)
    meter = _Meter(store)
    report = BenchReport("seqfile")
    for i in range(1, n_queries + 1):
        value, _ = sf.find(keys[rng.randrange(len(keys))])
        if value is None:
            raise BTreeError("sequential file lost a record")
        if _sample(i, n_queries, spec.report_interval):
            report.rows.append(meter.row(i, spec.simulate_latency))
    mean = report.final.reads / n_queries if n_queries else 0.0
    return SeqFileResult(report, sf.num_pages, mean)


def dump(tree: BTree, verify: bool = True) -> str:
    """Level-by-level listing of page ids, counts and keys."""
    lines = [f"height={tree.height} records={tree.record_count} root={tree.root}"]
    level = -1
    for node in tree.walk():
        if node.level != level:
            level = node.level
            lines.append(f"level {level}:")
        kind = node.kind.name.lower()
        keys = " ".join(map(str, node.keys))
        line = f"  page {node.page_id} {kind} n={len(node.keys)} keys=[{keys}]"
        if node.children:
            line += " children=[" + " ".join(map(str, node.children)) + "]"
        lines.append(line)
    if verify:
        lines.append(f"ok: {tree.verify()} records, search-tree invariants hold")
    return "\n".join(lines) + "\n"


# command line

def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="bench", description="B-tree I/O benchmarks")
    p.add_argument("command", choices=["insert", "query", "sweep", "seqfile", "dump"])
    p.add_argument("--records", type=int, default=10_000)
    p.add_argument("--order", choices=["random", "seq"], default="random")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--buffers", type=int, default=2, help="page frames M (first M for sweep)")
    p.add_argument("--max-buffers", type=int, default=8, help="last M for sweep")
    p.add_argument("--page-size", type=int, default=512)
    p.add_argument("--record-size", type=int, default=16)
    p.add_argument("--interval", type=int, default=1000)
    p.add_argument("--store", help="store file (written by insert, read by query/dump)")
    p.add_argument("--csv", help="CSV output path (default stdout)")
    p.add_argument("--simulate-latency", action="store_true",
                   help="add a sim_ms column using measured SD card page rates")
    return p


def _emit(report: BenchReport, path: str | None) -> None:
    if path is None:
        report.write_csv(sys.stdout)
    else:
        with open(path, "w", newline="") as fh:
            report.write_csv(fh)


def _suffixed(path: str | None, suffix: str) -> str | None:
    if path is None:
        return None
    root, ext = os.path.splitext(path)
    return f"{root}_{suffix}{ext or '.csv'}"


def _open_tree(args, spec: WorkloadSpec) -> BTree:
    if not args.store or not os.path.exists(args.store):
        raise BTreeError(f"missing store: {args.store!r} (build one with `bench insert --store`)")
    kw = {}
    if spec.simulate_latency:
        kw = {"read_latency_us": 1e6 / 345.0, "write_latency_us": 1e6 / 175.0}
    return BTree.open(FileStore.open(args.store, **kw), buffers=spec.buffers)


def run(argv=None) -> int:
    args = _parser().parse_args(argv)
    spec = WorkloadSpec(
        n_records=args.records, key_order=args.order, seed=args.seed, buffers=args.buffers,
        page_size=args.page_size, record_size=args.record_size,
        report_interval=args.interval, simulate_latency=args.simulate_latency,
    )
    if args.command == "insert":
        store = spec.new_store(args.store) if args.store else None
        report, tree = bench_insert(spec, store)
        tree.close()
        _emit(report, args.csv)
    elif args.command == "query":
        tree = _open_tree(args, spec)
        report = bench_query(spec, tree)
        tree.store.close()
        _emit(report, args.csv)
    elif args.command == "sweep":
        for m, (ins, qry) in bench_sweep(spec, range(args.buffers, args.max_buffers + 1)).items():
            if args.csv is None:
                print(f"# M={m} insert")
            _emit(ins, _suffixed(args.csv, f"m{m}_insert"))
            if args.csv is None:
                print(f"# M={m} query")
            _emit(qry, _suffixed(args.csv, f"m{m}_query"))
    elif args.command == "seqfile":
        res = bench_seqfile(spec)
        _emit(res.report, args.csv)
        print(f"data_pages={res.data_pages} mean_reads_per_query={res.mean_reads:.2f}",
              file=sys.stderr)
    elif args.command == "dump":
        tree = _open_tree(args, spec)
        sys.stdout.write(dump(tree))
        tree.store.close()
    return 0


def main(argv=None) -> int:
    try:
        return run(argv)
    except (BTreeError, ValueError, OSError) as exc:
        print(f"bench: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
