"""
Why index at all
================

An unindexed file of the same records answers a point query by scanning from
the first page, about half the file on average.
"""

from embtree.bench import WorkloadSpec, bench_insert, bench_query, bench_seqfile

spec = WorkloadSpec(n_records=10_000)
seq = bench_seqfile(spec)
print(f"sequential file: {seq.data_pages} pages, {seq.mean_reads:.1f} reads per query")

_, tree = bench_insert(spec)
q = bench_query(spec, tree).final
print(f"b-tree, height {tree.height}: {q.reads / q.records:.1f} reads per query")
