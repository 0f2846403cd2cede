"""Regenerates the stored test fixtures in tests/data (deterministic)."""

import random
from pathlib import Path

OUT = Path(__file__).resolve().parent.parent / "tests" / "data"


def scale_free(n=64, m=2, seed=20110601):
    # Directed preferential attachment: each new node sends m edges to
    # existing nodes chosen with probability proportional to total degree + 1,
    # and receives one edge back from a degree-proportional node with
    # probability 1/2.
    rng = random.Random(seed)
    edges = set()
    deg = [0] * n
    for i in range(m + 1):
        for j in range(m + 1):
            if i != j:
                edges.add((i, j))
                deg[i] += 1
                deg[j] += 1

    def pick(limit, exclude):
        while True:
            weights = [deg[k] + 1 for k in range(limit)]
            k = rng.choices(range(limit), weights=weights)[0]
            if k not in exclude:
                return k

    for v in range(m + 1, n):
        chosen = set()
        while len(chosen) < m:
            chosen.add(pick(v, chosen | {v}))
        for t in sorted(chosen):
            edges.add((v, t))
            deg[v] += 1
            deg[t] += 1
        if rng.random() < 0.5:
            s = pick(v, {v})
            if (s, v) not in edges:
                edges.add((s, v))
                deg[s] += 1
                deg[v] += 1
    with open(OUT / "scale_free_64.csv", "w") as f:
        f.write("source,target\n")
        for s, t in sorted(edges):
            f.write(f"{s},{t}\n")


def panel(seed=7):
    rng = random.Random(seed)
    countries = ["AT", "BE", "DE", "ES", "FR", "GR", "IE", "IT", "JP", "NL", "PT", "US"]
    size = {c: rng.uniform(200e3, 3000e3) for c in countries}
    size["US"] = 14000e3
    size["JP"] = 4500e3
    size["DE"] = 3300e3
    with open(OUT / "assets.csv", "w") as fa, open(OUT / "gdp.csv", "w") as fg:
        fa.write("year,holder,issuer,value_musd\n")
        fg.write("year,country,gdp_musd\n")
        for year in (2007, 2008):
            for h in countries:
                fg.write(f"{year},{h},{size[h] * rng.uniform(0.95, 1.05):.1f}\n")
                for i in countries:
                    if h == i or rng.random() < 0.15:
                        continue
                    v = size[h] * size[i] / 2e7 * rng.lognormvariate(-2.5, 1.2)
                    fa.write(f"{year},{h},{i},{v:.1f}\n")
                # holdings in a non-reporting country count toward coverage
                fa.write(f"{year},{h},KY,{size[h] * 0.002:.1f}\n")


if __name__ == "__main__":
    OUT.mkdir(parents=True, exist_ok=True)
    scale_free()
    panel()
