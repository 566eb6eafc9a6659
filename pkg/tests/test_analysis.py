import json

import pytest

from subsense.analysis import (
    RELATION_CLASSES,
    TaxonomyGraph,
    classify_relation,
    discriminative_substitutes,
    relation_distribution,
    substitute_language_share,
)
from subsense.substitutes import SubstituteCandidate, SubstituteSet


@pytest.fixture
def tax():
    return TaxonomyGraph(
        synsets={
            "food.n.01": {"food"},
            "vegetable.n.01": {"vegetable"},
            "fruit.n.01": {"fruit"},
            "onion.n.01": {"onion"},
            "garlic.n.01": {"garlic"},
            "apple.n.01": {"apple"},
            "center.n.01": {"middle", "center"},
            "stone.n.01": {"stone"},
        },
        hypernyms={
            "vegetable.n.01": {"food.n.01"},
            "fruit.n.01": {"food.n.01"},
            "onion.n.01": {"vegetable.n.01"},
            "garlic.n.01": {"vegetable.n.01"},
            "apple.n.01": {"fruit.n.01"},
        },
    )


def test_synonym(tax):
    assert classify_relation("middle", "center", tax) == "synonym"
    assert classify_relation("middle", "middle", tax) == "synonym"


def test_direct_hypernym_and_hyponym(tax):
    # the class names the target's role: onion is a direct hyponym of vegetable
    assert classify_relation("onion", "vegetable", tax) == "direct_hyponym"
    assert classify_relation("vegetable", "onion", tax) == "direct_hypernym"


def test_co_hyponym(tax):
    assert classify_relation("onion", "garlic", tax) == "co_hyponym"
    assert classify_relation("garlic", "onion", tax) == "co_hyponym"


def test_transitive_relations(tax):
    assert classify_relation("onion", "food", tax) == "transitive_hyponym"
    assert classify_relation("food", "onion", tax) == "transitive_hypernym"


def test_co_hyponym_3(tax):
    # onion and apple share only the depth-2 ancestor food
    assert classify_relation("onion", "apple", tax) == "co_hyponym_3"


def test_unknown(tax):
    assert classify_relation("onion", "zzz", tax) == "unknown"
    assert classify_relation("onion", "stone", tax) == "unknown"


def test_direct_beats_cohyponym_priority():
    # b is both a's direct hypernym and shares a's depth-1 ancestor (via a
    # second sense); the direct relation must win
    t = TaxonomyGraph(
        synsets={"root": {"r"}, "a": {"a"}, "b": {"b", "b2"}, "b2s": {"b2"}},
        hypernyms={"a": {"b"}, "b": {"root"}, "b2s": {"root"},
                   "root": set()},
    )
    assert classify_relation("a", "b", t) == "direct_hyponym"


def test_any_synset_semantics():
    # polysemous substitute: one sense unrelated, another synonymous
    t = TaxonomyGraph(
        synsets={"s1": {"bank", "shore"}, "s2": {"bank", "lender"}},
        hypernyms={},
    )
    assert classify_relation("shore", "bank", t) == "synonym"
    assert classify_relation("lender", "bank", t) == "synonym"


def test_cycle_rejected():
    with pytest.raises(ValueError):
        TaxonomyGraph(synsets={"a": {"a"}, "b": {"b"}},
                      hypernyms={"a": {"b"}, "b": {"a"}})


def test_edge_to_unknown_synset_rejected():
    with pytest.raises(ValueError):
        TaxonomyGraph(synsets={"a": {"a"}}, hypernyms={"a": {"ghost"}})


def test_taxonomy_jsonl_round_trip(tmp_path, tax):
    path = tmp_path / "tax.jsonl"
    with open(path, "w", encoding="utf-8") as f:
        for sid, lemmas in tax.synsets.items():
            f.write(json.dumps({"synset": sid, "lemmas": sorted(lemmas),
                                "hypernyms": sorted(tax.hypernyms.get(sid, []))})
                    + "\n")
    loaded = TaxonomyGraph.load(path)
    assert loaded.synsets == tax.synsets
    assert classify_relation("onion", "garlic", loaded) == "co_hyponym"


# ------------------------------------------------- discriminative substitutes

def sset(iid, word_counts):
    return SubstituteSet(iid, [
        SubstituteCandidate(w, -0.1 * (i + 1), count=c)
        for i, (w, c) in enumerate(word_counts)
    ])


def test_discriminative_hand_example():
    # "shore" appears 5x in sense A, 0x elsewhere -> score 5/(0+1)=5
    sets = [
        sset("i1", [("shore", 3), ("money", 1)]),
        sset("i2", [("shore", 2)]),
        sset("i3", [("money", 4)]),
    ]
    gold = {"i1": "A", "i2": "A", "i3": "B"}
    out = discriminative_substitutes(sets, gold)
    scores_a = dict(out["A"])
    assert scores_a["shore"] == pytest.approx(5 / 1)
    assert scores_a["money"] == pytest.approx(1 / 5)
    assert dict(out["B"])["money"] == pytest.approx(4 / 2)


def test_discriminative_tie_break_lexicographic():
    sets = [sset("i1", [("zeta", 2), ("alpha", 2)])]
    out = discriminative_substitutes(sets, {"i1": "A"})
    assert [w for w, _ in out["A"]] == ["alpha", "zeta"]


def test_discriminative_top_n_truncation():
    sets = [sset("i1", [(f"w{j}", 1) for j in range(15)])]
    out = discriminative_substitutes(sets, {"i1": "A"}, top_n=10)
    assert len(out["A"]) == 10


def test_discriminative_ignores_unlabeled_instances():
    sets = [sset("i1", [("x", 1)]), sset("mystery", [("y", 9)])]
    out = discriminative_substitutes(sets, {"i1": "A"})
    assert "y" not in dict(out["A"])


# ------------------------------------------------------ language share

def test_language_share_half():
    sets = [sset("i1", [("hello", 1), ("привет", 1)])]
    assert substitute_language_share(sets, "latin") == pytest.approx(0.5)
    assert substitute_language_share(sets, "cyrillic") == pytest.approx(0.5)


def test_language_share_digits_do_not_count():
    sets = [sset("i1", [("123", 1), ("abc", 1)])]
    assert substitute_language_share(sets, "latin") == pytest.approx(0.5)


def test_language_share_mixed_word_is_outside():
    sets = [sset("i1", [("abcд", 1)])]
    assert substitute_language_share(sets, "latin") == 0.0
    assert substitute_language_share(sets, "cyrillic") == 0.0


def test_language_share_empty():
    assert substitute_language_share([], "latin") == 0.0


def test_language_share_unknown_alphabet():
    with pytest.raises(ValueError):
        substitute_language_share([], "klingon")


# ------------------------------------------------ relation distribution

def test_relation_distribution(tax):
    pairs = [
        ("onion", "garlic", True),
        ("onion", "vegetable", True),
        ("onion", "zzz", True),
        ("onion", "food", False),  # outside top-20: ignored
    ]
    out = relation_distribution(pairs, tax)
    assert out["total"] == 3
    assert out["counts"]["co_hyponym"] == 1
    assert out["counts"]["direct_hyponym"] == 1
    assert out["counts"]["unknown"] == 1
    assert sum(out["counts"].values()) == 3
    assert sum(out["fractions"].values()) == pytest.approx(1.0)
    assert set(out["counts"]) == set(RELATION_CLASSES)


def test_relation_distribution_empty():
    out = relation_distribution([], TaxonomyGraph(synsets={}, hypernyms={}))
    assert out["total"] == 0
    assert all(f == 0.0 for f in out["fractions"].values())
