import pytest

from embtree import page_format as pf
from embtree.btree import BTree
from embtree.page_format import MetaPage, NodeKind, PageConfig
from embtree.storage import MemoryStore

# Four keys per node for both leaves and interiors: 32 bytes of slots.
FOUR_KEY_CFG = PageConfig(page_size=48, record_size=8)


def value_for(key, cfg):
    return (key.to_bytes(4, "little") * (cfg.value_size // 4 + 1))[:cfg.value_size]


def build_store(cfg, nodes, root, height, store=None):
    """Lay out a tree by hand.

    ``nodes`` maps a name to ``("leaf", [keys])`` or
    ``("interior", leftmost_name, [(key, child_name), ...])``.  Page ids are
    assigned in dict order starting at 1.  Returns ``(store, ids)``.
    """
    store = store or MemoryStore(cfg.page_size)
    ids = {name: store.allocate_page() for name in nodes}
    frame = bytearray(cfg.page_size)
    count = 0
    for name, node in nodes.items():
        frame[:] = bytes(cfg.page_size)
        if node[0] == "leaf":
            pf.init_node(frame, ids[name], NodeKind.LEAF)
            for i, k in enumerate(node[1]):
                pf.write_record(frame, i, k, value_for(k, cfg), cfg)
            pf.set_count(frame, len(node[1]))
            count += len(node[1])
        else:
            _, leftmost, entries = node
            pf.init_node(frame, ids[name], NodeKind.INTERIOR, ids[leftmost])
            for i, (k, child) in enumerate(entries):
                pf.write_entry(frame, i, k, ids[child])
            pf.set_count(frame, len(entries))
        store._write(ids[name], frame)
    meta = bytearray(cfg.page_size)
    pf.encode_meta(MetaPage(cfg, ids[root], height, count, store.next_page), meta)
    store._write(0, meta)
    return store, ids


# The example tree before inserting 165: path A1 -> A2 -> A3, where A2 and
# the leaf A3 are full and the root A1 has room.
EXAMPLE_NODES = {
    "A1": ("interior", "I0", [(100, "A2"), (300, "A4")]),
    "I0": ("interior", "L0", [(50, "L1")]),
    "A2": ("interior", "B0", [(120, "B1"), (130, "B2"), (160, "A3"), (190, "B4")]),
    "A4": ("interior", "C0", [(400, "C1")]),
    "L0": ("leaf", [10, 20]),
    "L1": ("leaf", [50, 60]),
    "B0": ("leaf", [100, 110]),
    "B1": ("leaf", [120, 125]),
    "B2": ("leaf", [130, 140, 150]),
    "A3": ("leaf", [160, 170, 175, 180]),
    "B4": ("leaf", [190, 200]),
    "C0": ("leaf", [300, 310]),
    "C1": ("leaf", [400, 410]),
}


@pytest.fixture
def example_tree():
    """(store, ids) for the example tree; open it with BTree.open."""
    return build_store(FOUR_KEY_CFG, EXAMPLE_NODES, "A1", 3)


def new_tree(page_size=512, record_size=16, buffers=2, store=None):
    cfg = PageConfig(page_size, record_size)
    store = store or MemoryStore(page_size)
    return BTree.create(store, cfg, buffers=buffers)


# acceptance reporting

_ACCEPTANCE = []


@pytest.fixture
def acceptance():
    def record(name, ok, detail):
        line = f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}"
        _ACCEPTANCE.append(line)
        print(line)
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE:
            terminalreporter.write_line(line)
