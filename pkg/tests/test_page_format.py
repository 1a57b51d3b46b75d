import pytest
from hypothesis import given, settings, strategies as st

from embtree import page_format as pf
from embtree.errors import CorruptMetadataError, CorruptPageError, InvalidConfigError
from embtree.page_format import NO_PAGE, MetaPage, NodeKind, PageConfig, PageHeader


@pytest.mark.parametrize("page_size,record_size,expected", [
    (512, 16, 31),
    (16 + 2 * 16, 16, 2),
    (256, 16, 15),
])
def test_leaf_capacity(page_size, record_size, expected):
    assert pf.leaf_capacity(PageConfig(page_size, record_size)) == expected


@pytest.mark.parametrize("page_size,expected", [(512, 62), (16 + 2 * 8, 2), (1024, 126)])
def test_interior_capacity(page_size, expected):
    # 8-byte records so the leaf side is valid at the smallest page
    assert pf.interior_capacity(PageConfig(page_size, 8)) == expected


@pytest.mark.parametrize("page_size,record_size", [(47, 16), (31, 8), (16, 4)])
def test_capacity_below_two_rejected(page_size, record_size):
    with pytest.raises(InvalidConfigError):
        PageConfig(page_size, record_size)


def test_non_default_key_or_header_rejected():
    with pytest.raises(InvalidConfigError):
        PageConfig(512, 16, key_size=8)
    with pytest.raises(InvalidConfigError):
        PageConfig(512, 16, header_size=32)


def test_header_layout_offsets():
    frame = bytearray(64)
    pf.encode_header(PageHeader(0x01020304, 7, NodeKind.INTERIOR, 0x0A0B0C0D), frame)
    assert frame[:16] == bytes.fromhex("04030201" "0700" "01" "00" "0d0c0b0a" "00000000")


def test_encode_leaves_record_area_untouched():
    cfg = PageConfig(64, 16)
    frame = bytearray(range(64))
    pf.encode_header(PageHeader(3, 1), frame)
    assert frame[16:] == bytearray(range(16, 64))


def test_header_roundtrip_leaf_zero():
    cfg = PageConfig()
    frame = bytearray(cfg.page_size)
    hdr = PageHeader(page_id=0, count=0, kind=NodeKind.LEAF)
    pf.encode_header(hdr, frame)
    assert pf.decode_header(frame, cfg) == hdr


def test_count_at_capacity_accepted_above_rejected():
    cfg = PageConfig()
    frame = bytearray(cfg.page_size)
    pf.encode_header(PageHeader(1, 31), frame)
    assert pf.decode_header(frame, cfg).count == 31
    pf.encode_header(PageHeader(1, 32), frame)
    with pytest.raises(CorruptPageError):
        pf.decode_header(frame, cfg)


def test_zeroed_frame_decodes_to_empty_leaf():
    cfg = PageConfig()
    assert pf.decode_header(bytearray(512), cfg) == PageHeader(0, 0, NodeKind.LEAF)


def test_count_65535_is_corrupt():
    cfg = PageConfig()
    frame = bytearray(512)
    pf.set_count(frame, 0xFFFF)
    with pytest.raises(CorruptPageError):
        pf.decode_header(frame, cfg)


def test_bad_kind_byte_is_corrupt():
    frame = bytearray(512)
    frame[6] = 7
    with pytest.raises(CorruptPageError):
        pf.decode_header(frame, PageConfig())


@st.composite
def valid_headers(draw):
    cfg = draw(st.sampled_from([PageConfig(), PageConfig(256, 16), PageConfig(1024, 32),
                                PageConfig(48, 8)]))
    kind = draw(st.sampled_from(list(NodeKind)))
    count = draw(st.integers(0, cfg.capacity(kind)))
    page_id = draw(st.integers(0, NO_PAGE - 1))
    leftmost = draw(st.integers(0, NO_PAGE - 1)) if kind == NodeKind.INTERIOR else NO_PAGE
    return cfg, PageHeader(page_id, count, kind, leftmost)


@settings(max_examples=1000)
@given(valid_headers())
def test_header_roundtrip_property(case):
    cfg, hdr = case
    frame = bytearray(cfg.page_size)
    pf.encode_header(hdr, frame)
    assert pf.decode_header(frame, cfg) == hdr


def leaf_frame(keys, cfg=PageConfig(), garbage=0):
    frame = bytearray([garbage]) * cfg.page_size
    pf.init_node(frame, 1, NodeKind.LEAF)
    for i, k in enumerate(keys):
        pf.write_record(frame, i, k, bytes(cfg.value_size), cfg)
    pf.set_count(frame, len(keys))
    return frame


def interior_frame(leftmost, entries, cfg=PageConfig()):
    frame = bytearray(cfg.page_size)
    pf.init_node(frame, 1, NodeKind.INTERIOR, leftmost)
    for i, (k, c) in enumerate(entries):
        pf.write_entry(frame, i, k, c)
    pf.set_count(frame, len(entries))
    return frame


def linear_lower_bound(keys, key):
    for i, k in enumerate(keys):
        if k >= key:
            return i
    return len(keys)


def test_find_position_example_leaf():
    assert pf.find_position(leaf_frame([160, 170, 175, 180]), 165, PageConfig()) == 1


def test_find_position_empty():
    assert pf.find_position(leaf_frame([]), 12345, PageConfig()) == 0


def test_find_position_small_cases():
    frame = leaf_frame([10, 20, 30])
    assert pf.find_position(frame, 20, PageConfig()) == 1
    assert pf.find_position(frame, 35, PageConfig()) == 3


@given(st.lists(st.integers(0, 2**32 - 1), unique=True, max_size=31), st.integers(0, 2**32 - 1),
       st.integers(0, 255))
def test_find_position_matches_linear_scan(keys, key, garbage):
    keys.sort()
    frame = leaf_frame(keys, garbage=garbage)
    assert pf.find_position(frame, key, PageConfig()) == linear_lower_bound(keys, key)


@given(st.lists(st.integers(0, 2**32 - 1), unique=True, max_size=62), st.integers(0, 2**32 - 1))
def test_find_position_interior_stride(keys, key):
    keys.sort()
    frame = interior_frame(7, [(k, i) for i, k in enumerate(keys)])
    assert pf.find_position(frame, key, PageConfig()) == linear_lower_bound(keys, key)


def test_child_for_key_separator_convention():
    frame = interior_frame(0xA, [(160, 0xB)])
    assert pf.child_for_key(frame, 150) == 0xA
    assert pf.child_for_key(frame, 160) == 0xB
    assert pf.child_for_key(frame, 161) == 0xB


def test_child_for_key_single_child():
    frame = interior_frame(0xA, [])
    for key in (0, 17, 2**32 - 1):
        assert pf.child_for_key(frame, key) == 0xA


def test_child_for_key_rejects_leaf_and_null_child():
    with pytest.raises(CorruptPageError):
        pf.child_for_key(leaf_frame([1]), 1)
    with pytest.raises(CorruptPageError):
        pf.child_for_key(interior_frame(NO_PAGE, [(5, 2)]), 1)


@given(st.lists(st.integers(0, 2**32 - 1), unique=True, max_size=62), st.integers(0, 2**32 - 1))
def test_child_for_key_matches_oracle_descent(keys, key):
    keys.sort()
    children = list(range(100, 100 + len(keys) + 1))
    frame = interior_frame(children[0], list(zip(keys, children[1:])))
    # oracle: rightmost child whose separator is <= key
    expected = children[sum(1 for k in keys if k <= key)]
    assert pf.child_for_key(frame, key) == expected


@settings(max_examples=300)
@given(st.lists(st.integers(0, 2**32 - 1), unique=True, min_size=1, max_size=31),
       st.data())
def test_stale_tail_is_invisible(keys, data):
    keys.sort()
    cfg = PageConfig()
    n = data.draw(st.integers(0, len(keys)))
    frame = leaf_frame(keys, cfg)
    pf.set_count(frame, n)
    probes = data.draw(st.lists(st.integers(0, 2**32 - 1), max_size=10)) + keys
    before = [pf.find_position(frame, k, cfg) for k in probes]
    tail = 16 + n * cfg.record_size
    for _ in range(data.draw(st.integers(1, 20))):
        if tail >= cfg.page_size:
            break
        off = data.draw(st.integers(tail, cfg.page_size - 1))
        frame[off] ^= data.draw(st.integers(1, 255))
    assert [pf.find_position(frame, k, cfg) for k in probes] == before


def test_move_slots_overlapping_both_directions():
    frame = bytearray(16 + 4 * 6)
    mv = memoryview(frame)
    for i in range(6):
        frame[16 + 4 * i:20 + 4 * i] = bytes([i]) * 4
    pf.move_slots(mv, 1, 0, 4, 4)
    assert [frame[16 + 4 * i] for i in range(6)] == [0, 0, 1, 2, 3, 5]
    pf.move_slots(mv, 0, 1, 4, 4)
    assert [frame[16 + 4 * i] for i in range(6)] == [0, 1, 2, 3, 3, 5]


def test_meta_roundtrip_and_corruption():
    cfg = PageConfig(256, 16)
    frame = bytearray(256)
    meta = MetaPage(cfg, root=5, height=2, record_count=123, next_page=9)
    pf.encode_meta(meta, frame)
    assert pf.decode_meta(frame) == meta
    assert pf.peek_page_size(bytes(frame[:pf.META_SIZE])) == 256
    with pytest.raises(CorruptMetadataError):
        pf.decode_meta(bytearray(256))
    frame[4] = 99
    with pytest.raises(CorruptMetadataError):
        pf.decode_meta(frame)
