"""Narrative tour of the analysis helpers on a hand-built taxonomy.

Shows relation classification between target/substitute pairs, the
discriminative-substitute ranking, and the script-based language share —
all on small in-memory fixtures, no model or files required.

Run:  python3 demos/substitute_analysis_demo.py
"""

from subsense.analysis import (
    TaxonomyGraph,
    classify_relation,
    discriminative_substitutes,
    substitute_language_share,
)
from subsense.substitutes import SubstituteCandidate, SubstituteSet


def main():
    tax = TaxonomyGraph(
        synsets={
            "food.n.01": {"food"},
            "vegetable.n.01": {"vegetable"},
            "fruit.n.01": {"fruit"},
            "onion.n.01": {"onion"},
            "garlic.n.01": {"garlic"},
            "apple.n.01": {"apple"},
            "center.n.01": {"middle", "center"},
        },
        hypernyms={
            "vegetable.n.01": {"food.n.01"},
            "fruit.n.01": {"food.n.01"},
            "onion.n.01": {"vegetable.n.01"},
            "garlic.n.01": {"vegetable.n.01"},
            "apple.n.01": {"fruit.n.01"},
        },
    )
    print("relation classes (target vs substitute):")
    for target, substitute in [
        ("onion", "vegetable"),   # target is the more specific term
        ("vegetable", "onion"),   # target is the more general term
        ("onion", "garlic"),      # siblings under one parent
        ("onion", "apple"),       # cousins meeting at the grandparent
        ("onion", "food"),        # two hops up
        ("middle", "center"),     # same synset
        ("onion", "quasar"),      # not in the taxonomy
    ]:
        rel = classify_relation(target, substitute, tax)
        print(f"  {target:>10} / {substitute:<10} -> {rel}")

    sets = [
        SubstituteSet("i1", [SubstituteCandidate("riverbank", -0.1),
                             SubstituteCandidate("shore", -0.2)]),
        SubstituteSet("i2", [SubstituteCandidate("riverbank", -0.1),
                             SubstituteCandidate("берег", -0.3)]),
        SubstituteSet("i3", [SubstituteCandidate("lender", -0.1),
                             SubstituteCandidate("firm", -0.4)]),
    ]
    gold = {"i1": "shore", "i2": "shore", "i3": "institution"}
    print("\ndiscriminative substitutes per sense:")
    for sense, ranked in discriminative_substitutes(sets, gold, top_n=3).items():
        pretty = ", ".join(f"{w} ({score:.1f})" for w, score in ranked)
        print(f"  {sense}: {pretty}")

    share = substitute_language_share(sets, alphabet="latin")
    print(f"\nlatin-script substitute share: {share:.3f}")


if __name__ == "__main__":
    main()
