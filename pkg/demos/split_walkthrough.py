"""
Watching a split cascade
========================

Nodes hold four keys here, so splits come quickly.  An insert that fits
writes one page; each split level adds two (the left half keeps its page,
the right half gets a new one).  We stop at the first insert that splits a
leaf and its parent and show the tree before and after.
"""

import random

from embtree.bench import dump
from embtree.btree import BTree
from embtree.page_format import PageConfig
from embtree.storage import MemoryStore

cfg = PageConfig(page_size=48, record_size=8)   # 4 records per leaf, 4 entries per interior
tree = BTree.create(MemoryStore(cfg.page_size), cfg)
keys = random.Random(3).sample(range(1000), 200)

for key in keys:
    snapshot = dump(tree, verify=False)
    before = tree.store.counters.writes
    height = tree.height
    tree.put(key)
    writes = tree.store.counters.writes - before
    if writes == 5 and tree.height == height:
        break

print(snapshot)
print(f"\ninsert {key}: {writes} page writes, height stays {tree.height}\n")
print(dump(tree))
