"""
More page frames, fewer reads
=============================

Same keys, M = 2..8 frames.  With three or more frames the root is pinned, so
query reads drop from H to H - 1 per lookup; further frames form an LRU cache
of the upper interior levels.
"""

from embtree.bench import WorkloadSpec, bench_sweep

spec = WorkloadSpec(n_records=10_000)
results = bench_sweep(spec, range(2, 9))

print(" M  insert reads  query reads  query hit rate")
for m, (ins, qry) in results.items():
    q = qry.final
    print(f"{m:2d}  {ins.final.reads:12d}  {q.reads:11d}  {q.hits / (q.hits + q.misses):14.3f}")
