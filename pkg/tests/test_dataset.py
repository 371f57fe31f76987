import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fedcontrast.datasets import (
    Dataset,
    Interaction,
    format_stats,
    ingest,
    kcore_filter,
    leave_one_out_split,
    parse_line,
    stats,
    write_id_maps,
)


def write(tmp_path, text, name="data.tsv"):
    p = tmp_path / name
    p.write_text(text)
    return p


def scan_counts(text, sep):
    """Line-scanner oracle: distinct users, distinct items, total lines."""
    users, items, actions = set(), set(), 0
    for line in text.strip().splitlines():
        u, i, _ = line.split(sep)
        users.add(u)
        items.add(i)
        actions += 1
    return len(users), len(items), actions


def test_parse_line_tabular_and_comma():
    want = Interaction("u1", "i9", 100)
    assert parse_line("u1\ti9\t100", "tabular", 1) == want
    assert parse_line("u1,i9,100", "tabular", 1) == want


def test_parse_line_movielens_ignores_rating():
    assert parse_line("1::1193::5::978300760", "movielens", 1) == Interaction(
        "1", "1193", 978300760
    )


def test_parse_line_errors_name_line_number():
    with pytest.raises(ValueError, match="line 7"):
        parse_line("not enough fields", "tabular", 7)
    with pytest.raises(ValueError, match="line 3"):
        parse_line("a::b::c", "movielens", 3)
    with pytest.raises(ValueError, match="line 2"):
        parse_line("a\tb\tnot_a_number", "tabular", 2)


def test_ingest_three_lines(tmp_path):
    ds = ingest(write(tmp_path, "alice\tx\t3\nbob\ty\t1\nalice\ty\t2\n"), "tabular")
    assert ds.num_users == 2
    assert ds.num_items == 2
    assert ds.num_actions == 3
    # dense ids in first-appearance order; alice sorted by timestamp
    assert ds.user_ids == ["alice", "bob"]
    assert ds.item_ids == ["x", "y"]
    assert ds.sequences[0].tolist() == [1, 0]
    assert ds.sequences[1].tolist() == [1]


def test_ingest_timestamp_ties_keep_file_order(tmp_path):
    ds = ingest(write(tmp_path, "u\ta\t5\nu\tb\t5\nu\tc\t4\n"), "tabular")
    assert [ds.item_ids[i] for i in ds.sequences[0]] == ["c", "a", "b"]


def test_ingest_empty_file_and_malformed_line(tmp_path):
    with pytest.raises(ValueError):
        ingest(write(tmp_path, ""), "tabular")
    with pytest.raises(ValueError, match="line 2"):
        ingest(write(tmp_path, "u\ta\t1\nbroken\n"), "tabular")
    with pytest.raises(FileNotFoundError):
        ingest(tmp_path / "missing.tsv", "tabular")


def test_ingest_movielens_format(tmp_path):
    text = "1::10::5::100\n2::10::3::50\n1::20::4::90\n"
    ds = ingest(write(tmp_path, text), "movielens")
    assert ds.num_users == 2
    assert ds.num_items == 2
    assert ds.num_actions == 3
    assert [ds.item_ids[i] for i in ds.sequences[0]] == ["20", "10"]


@settings(max_examples=40, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 8), st.integers(0, 12), st.integers(0, 50)), min_size=1, max_size=80))
def test_ingest_counts_match_line_scanner(tmp_path_factory, rows):
    text = "".join(f"u{u}\ti{i}\t{t}\n" for u, i, t in rows)
    path = tmp_path_factory.mktemp("ds") / "data.tsv"
    path.write_text(text)
    ds = ingest(path, "tabular")
    assert (ds.num_users, ds.num_items, ds.num_actions) == scan_counts(text, "\t")
    # per-user sequences are sorted by timestamp
    times = {}
    for n, (u, i, t) in enumerate(rows):
        times.setdefault(f"u{u}", []).append((t, n, f"i{i}"))
    for uid, seq in zip(ds.user_ids, ds.sequences):
        want = [item for _, _, item in sorted(times[uid])]
        assert [ds.item_ids[j] for j in seq] == want


def test_write_id_maps(tmp_path):
    ds = ingest(write(tmp_path, "bob\tzz\t1\nann\tzz\t2\n"), "tabular")
    write_id_maps(ds, tmp_path / "maps")
    assert (tmp_path / "maps" / "user_map.txt").read_text() == "bob\t0\nann\t1\n"
    assert (tmp_path / "maps" / "item_map.txt").read_text() == "zz\t0\n"


def interactions(ds: Dataset):
    out = []
    for u, seq in enumerate(ds.sequences):
        out.extend((ds.user_ids[u], ds.item_ids[i]) for i in seq)
    return out


def test_kcore_k1_is_identity(tmp_path):
    ds = ingest(write(tmp_path, "a\tx\t1\nb\ty\t2\na\ty\t3\n"), "tabular")
    out = kcore_filter(ds, 1)
    assert interactions(out) == interactions(ds)


def test_kcore_star_graph_collapses_to_error(tmp_path):
    text = "".join(f"u{n}\thub\t{n}\n" for n in range(5))
    ds = ingest(write(tmp_path, text), "tabular")
    with pytest.raises(ValueError):
        kcore_filter(ds, 5)


def test_kcore_cascade(tmp_path):
    # dropping rare items shortens u3 below k, which then drops an item
    text = (
        "u1\ta\t1\nu1\tb\t2\nu2\ta\t3\nu2\tb\t4\n"
        "u3\ta\t5\nu3\trare\t6\n"
    )
    ds = ingest(write(tmp_path, text), "tabular")
    out = kcore_filter(ds, 2)
    assert sorted(out.user_ids) == ["u1", "u2"]
    assert sorted(out.item_ids) == ["a", "b"]
    assert out.num_actions == 4


@settings(max_examples=40, deadline=None)
@given(
    st.lists(st.tuples(st.integers(0, 10), st.integers(0, 10)), min_size=1, max_size=120),
    st.integers(1, 4),
)
def test_kcore_no_light_users_or_items_survive(tmp_path_factory, pairs, k):
    text = "".join(f"u{u}\ti{i}\t{n}\n" for n, (u, i) in enumerate(pairs))
    path = tmp_path_factory.mktemp("ds") / "d.tsv"
    path.write_text(text)
    ds = ingest(path, "tabular")
    try:
        out = kcore_filter(ds, k)
    except ValueError:
        return
    per_item = np.bincount(np.concatenate(out.sequences), minlength=out.num_items)
    assert all(len(s) >= k for s in out.sequences)
    assert per_item.min() >= k
    # idempotent at fixpoint
    again = kcore_filter(out, k)
    assert interactions(again) == interactions(out)
    # filtering only removes interactions, never invents them
    kept = interactions(out)
    orig = interactions(ds)
    for pair in set(kept):
        assert kept.count(pair) == orig.count(pair)


def make_dataset(seqs):
    return Dataset(
        sequences=[np.array(s, dtype=np.int64) for s in seqs],
        num_items=int(max(max(s) for s in seqs)) + 1,
        user_ids=[f"u{n}" for n in range(len(seqs))],
        item_ids=[str(i) for i in range(int(max(max(s) for s in seqs)) + 1)],
    )


def test_split_examples():
    split = leave_one_out_split(make_dataset([[0, 1, 2], [3, 1, 0, 2, 4]]))
    assert split.train[0].tolist() == [0]
    assert split.val[0] == 1
    assert split.test[0] == 2
    assert split.train[1].tolist() == [3, 1, 0]
    assert split.val[1] == 2
    assert split.test[1] == 4
    assert split.num_items == 5
    assert split.num_users == 2


def test_split_short_sequence_names_user():
    with pytest.raises(ValueError, match="u1"):
        leave_one_out_split(make_dataset([[0, 1, 2], [0, 1]]))


@settings(max_examples=40, deadline=None)
@given(st.lists(st.lists(st.integers(0, 30), min_size=3, max_size=12), min_size=1, max_size=10))
def test_split_is_lossless(seqs):
    ds = make_dataset(seqs)
    split = leave_one_out_split(ds)
    for u, seq in enumerate(seqs):
        rebuilt = split.train[u].tolist() + [split.val[u], split.test[u]]
        assert rebuilt == seq


def test_stats_arithmetic():
    ds = make_dataset([[0, 1, 2], [0, 1, 2, 3, 3]])
    s = stats(ds)
    assert s.num_users == 2
    assert s.num_items == 4
    assert s.num_actions == 8
    assert s.avg_length == 4.0
    assert s.density == 1.0


def test_stats_single_action():
    s = stats(make_dataset([[0, 0, 0]]))
    assert s.num_items == 1
    assert s.density == pytest.approx(3.0)  # repeats can exceed 1 per cell
    s2 = stats(Dataset(sequences=[np.array([0])], num_items=1, user_ids=["u"], item_ids=["0"]))
    assert s2.density == 1.0
    assert s2.avg_length == 1.0


def test_format_stats_key_value_lines():
    text = format_stats(stats(make_dataset([[0, 1, 2], [0, 1, 2, 3, 3]])))
    lines = dict(line.split("=") for line in text.strip().splitlines())
    assert lines["num_users"] == "2"
    assert lines["num_items"] == "4"
    assert lines["num_actions"] == "8"
    assert lines["avg_length"] == "4.0000"
    assert lines["density"] == "1.000000"
