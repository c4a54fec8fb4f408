"""
A tour of the relation store built from the bundled corpus
==========================================================

The agent never sees the corpus directly; everything it knows arrives
through the queries exercised below: co-location (rp), zone affinity,
stacking, and occlusion.
"""

from geosemnav import KnowledgeParams, bundled_class_table, bundled_corpus, ingest_corpus


def main():
    table = bundled_class_table()
    graphs = bundled_corpus()
    store = ingest_corpus(graphs, KnowledgeParams(), table)
    print(f"ingested {len(graphs)} scene graphs, {len(list(table))} known classes\n")

    target = "cup"
    partners = ["table", "bottle", "chair", "sofa", "sink", "plant", "tv"]
    print(f"co-location pull toward '{target}':")
    for cls, p in sorted(((c, store.rp(target, c)) for c in partners),
                         key=lambda t: -t[1]):
        bar = "#" * int(p * 40)
        print(f"  rp({target:>6s}, {cls:<6s}) = {p:.4f}  {bar}")

    print("\nwhere does a cup live?")
    for zone in ("office", "pantry", "lounge"):
        print(f"  located_at(cup, {zone:<7s}) = {store.located_at('cup', zone):.3f}")

    print("\nsupport relations from the same scenes:")
    print(f"  on_top_of(cup, table)    = {store.on_top_of('cup', 'table'):.3f}")
    print(f"  on_top_of(table, cup)    = {store.on_top_of('table', 'cup'):.3f}")
    print(f"  located_below(table, cup) = {store.located_below('table', 'cup'):.3f}")

    print("\nwhat could hide a cup? (frontal-area ratio, gated by co-location)")
    for blocker in ("chair", "sofa", "plant"):
        print(f"  occlusion_by(cup, {blocker:<5s}) = {store.occlusion_by('cup', blocker):.3f}")

    seen = ["sink", "fridge"]
    print(f"\nseeing {seen} suggests zone: {store.infer_zone(seen)!r}")

    print("\nfirst few exported facts:")
    for fact in store.facts()[:6]:
        print("  ", fact)


if __name__ == "__main__":
    main()
