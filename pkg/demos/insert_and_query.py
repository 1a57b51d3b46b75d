"""
Counting page I/O for inserts and queries
=========================================

Build a 10,000 record tree with two page frames and watch the device
counters.  Every insert writes at least one page, and a split adds two more.
"""

from embtree.bench import WorkloadSpec, bench_insert, bench_query

spec = WorkloadSpec(n_records=10_000, buffers=2, report_interval=2000)
report, tree = bench_insert(spec)

# one row every 2000 records: the write count stays close to one per record
for row in report.rows:
    print(f"{row.records:6d} records  {row.writes:6d} writes  height {row.height}")

extra = report.final.writes - spec.n_records
print(f"split overhead: {extra} writes ({extra / spec.n_records:.1%})")

# with a single read frame each lookup reads one page per level
q = bench_query(spec, tree).final
print(f"{q.records} queries, {q.reads} reads, {q.reads / q.records:.2f} per query")
