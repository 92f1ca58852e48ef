"""Deterministic synthetic dataset with planted groups, for demos and the
end-to-end test.

The generator writes edge, citation, dictionary and seed files plus a
config. The segment-to-group assignment file, which stands in for manual
labeling, is derived by clustering the generated data once and giving each
segment the planted group most of its members belong to.
"""

from __future__ import annotations

import tempfile
from collections import Counter
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import yaml

GROUP_SIZES = {
    # proportional to the eight audience groups of a 12,413-account map, scaled to 997
    "Conservative Politics": 131,
    "Euro-Right": 32,
    "Government and Public Policy": 94,
    "International Conspiracy Theory": 110,
    "Liberal Politics": 68,
    "Other": 269,
    "Russia Focused": 124,
    "Veterans & Military": 169,
}
SEED_ACCOUNTS = ("VeteransToday", "SouthFronteng", "veteransnewsnow")

DICTIONARY = {
    "Junk": [
        "freedom-eagle-news.com", "patriot-wire-daily.com", "truthbomb-report.net", "redpill-times.com",
        "liberty-alarm.org", "deepstate-watch.com", "nwo-exposed.info", "eagle-eye-dispatch.com",
        "headline-rebel.com", "shadowgov-files.net",
    ],
    "Professional": [
        "apnews.com", "reuters.com", "nytimes.com", "washingtonpost.com", "wsj.com", "bbc.co.uk",
        "theguardian.com", "npr.org", "cnn.com", "foxnews.com", "usatoday.com", "latimes.com",
        "bloomberg.com", "politico.com", "thehill.com", "militarytimes.com", "stripes.com", "abcnews.go.com",
        "cbsnews.com", "nbcnews.com",
    ],
    "StateSponsored": ["rt.com", "sputniknews.com", "tass.com", "presstv.ir", "cgtn.com"],
    "VetOps": [
        "veteranstoday.com", "veteransnewsnow.com", "southfront.org", "vetsdaily-report.com",
        "militarytruth-wire.com",
    ],
}
UNCLASSIFIED = ["youtube.com", "facebook.com", "medium.com", "someone.blogspot.com", "imgur.com"]

# junk, professional, state-sponsored, vetops, unclassified
CATEGORY_MIX = {
    "Conservative Politics": (0.20, 0.64, 0.02, 0.04, 0.10),
    "Euro-Right": (0.18, 0.60, 0.08, 0.02, 0.12),
    "Government and Public Policy": (0.03, 0.87, 0.01, 0.01, 0.08),
    "International Conspiracy Theory": (0.22, 0.52, 0.08, 0.03, 0.15),
    "Liberal Politics": (0.08, 0.80, 0.02, 0.00, 0.10),
    "Other": (0.12, 0.68, 0.03, 0.02, 0.15),
    "Russia Focused": (0.14, 0.50, 0.24, 0.02, 0.10),
    "Veterans & Military": (0.06, 0.82, 0.01, 0.01, 0.10),
}

N_CITATIONS = 5000
N_AMPLIFIERS = 4
AMPLIFIER_POSTS = 80


@dataclass(frozen=True)
class SynthSpec:
    seed: int = 20170402
    hubs: int = 10
    hub_follow_p: float = 0.6
    member_follows: float = 6.0  # expected random in-group follows per account
    cross_follow_p: float = 0.002
    seed_follow_p: float = 0.45
    mentions: int = 1500
    target_size: int = 810
    segments: int = 24


def _account_ids() -> dict[str, list[str]]:
    out = {}
    counter = 0
    for group, size in GROUP_SIZES.items():
        out[group] = [f"acct{counter + i:04d}" for i in range(size)]
        counter += size
    return out


def _url(rng: np.random.Generator, domain: str, i: int) -> str:
    scheme = "https" if rng.random() < 0.8 else "http"
    host = domain
    r = rng.random()
    if r < 0.35:
        host = "www." + domain
    elif r < 0.40:
        host = "m." + domain
    if rng.random() < 0.1:
        host = host.upper()
    path = f"/{2017 if rng.random() < 0.9 else 2016}/{int(rng.integers(1, 13)):02d}/story-{i}"
    if rng.random() < 0.2:
        path += "?utm_source=twitter&utm_medium=social"
    return f"{scheme}://{host}{path}"


def generate(outdir: str | Path, spec: SynthSpec = SynthSpec(), derive_assignment: bool = True) -> Path:
    """Write the dataset into ``outdir`` and return the config path."""
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(spec.seed)
    groups = _account_ids()
    everyone = [a for members in groups.values() for a in members]
    truth = {a: g for g, members in groups.items() for a in members}

    # amplifiers are hub accounts that follow every seed, so they survive
    # sampling and the core reduction
    hub_pool = groups["Russia Focused"][: spec.hubs] + groups["International Conspiracy Theory"][: spec.hubs]
    amplifiers = sorted(str(a) for a in rng.choice(hub_pool, size=N_AMPLIFIERS, replace=False))

    follows: set[tuple[str, str]] = set()
    for g, members in groups.items():
        hubs = members[: spec.hubs]
        member_p = min(1.0, spec.member_follows / len(members))
        for a in members:
            for h in hubs:
                if h != a and rng.random() < spec.hub_follow_p:
                    follows.add((a, h))
            for b in members:
                if b != a and rng.random() < member_p:
                    follows.add((a, b))
            n_cross = rng.binomial(len(everyone), spec.cross_follow_p)
            for b in rng.choice(everyone, size=n_cross, replace=False):
                if truth[str(b)] != g:
                    follows.add((a, str(b)))
            for s in SEED_ACCOUNTS:
                if a in amplifiers or rng.random() < spec.seed_follow_p:
                    follows.add((a, s))
    mentions: set[tuple[str, str]] = set()
    pool = everyone + list(SEED_ACCOUNTS)
    while len(mentions) < spec.mentions:
        a, b = rng.choice(pool, size=2)
        if a != b:
            mentions.add((str(a), str(b)))

    with open(out / "follows.tsv", "w", encoding="utf-8", newline="\n") as fh:
        fh.write("# follower\tfollowed\n")
        for a, b in sorted(follows):
            fh.write(f"{a}\t{b}\n")
    with open(out / "mentions.tsv", "w", encoding="utf-8", newline="\n") as fh:
        fh.write("# mentioner\tmentioned\n")
        for a, b in sorted(mentions):
            fh.write(f"{a}\t{b}\n")
    (out / "seeds.txt").write_text("".join(f"{s}\n" for s in SEED_ACCOUNTS), encoding="utf-8")

    with open(out / "dictionary.tsv", "w", encoding="utf-8", newline="\n") as fh:
        fh.write("# domain\tcategory\n")
        for cat, domains in DICTIONARY.items():
            for d in domains:
                fh.write(f"{d}\t{cat}\n")

    categories = ["Junk", "Professional", "StateSponsored", "VetOps", None]
    rows = []
    for a in amplifiers:
        for _ in range(AMPLIFIER_POSTS):
            cat = "Junk" if rng.random() < 0.8 else "StateSponsored"
            domain = str(rng.choice(DICTIONARY[cat]))
            rows.append((a, domain, int(rng.integers(0, 2))))
    while len(rows) < N_CITATIONS:
        a = str(rng.choice(everyone))
        cat = categories[int(rng.choice(5, p=CATEGORY_MIX[truth[a]]))]
        domain = str(rng.choice(UNCLASSIFIED if cat is None else DICTIONARY[cat]))
        rows.append((a, domain, int(rng.geometric(0.15)) - 1))
    order = rng.permutation(len(rows))
    with open(out / "citations.tsv", "w", encoding="utf-8", newline="\n") as fh:
        fh.write("# account\turl\tshares\tposted_at\n")
        for i in order:
            a, domain, shares = rows[i]
            day = 2 + int(i) % 29
            fh.write(f"{a}\t{_url(rng, domain, int(i))}\t{shares}\t2017-04-{day:02d}T12:00:00Z\n")

    with open(out / "truth.tsv", "w", encoding="utf-8", newline="\n") as fh:
        fh.write("# account\tplanted_group\n")
        for a in everyone:
            fh.write(f"{a}\t{truth[a]}\n")
        for s in SEED_ACCOUNTS:
            fh.write(f"{s}\tOther\n")

    config = {
        "inputs": {
            "edges": [{"path": "follows.tsv", "kind": "follow"}, {"path": "mentions.tsv", "kind": "mention"}],
            "citations": "citations.tsv",
            "dictionary": "dictionary.tsv",
            "seeds": "seeds.txt",
            "assignment": "assignment.tsv",
        },
        "output": "out",
        "relation": "follow",
        "sample": {"depth": 1},
        "kcore": {"target_size": spec.target_size},
        "clustering": {"linkage": "average", "segments": spec.segments},
        "layout": {"iterations": 300, "seed": 7},
        "amplifiers": {"min_shares": 50, "max_median_reshare": 1},
    }
    cfg_path = out / "config.yaml"
    cfg_path.write_text(yaml.safe_dump(config, sort_keys=False), encoding="utf-8")
    if derive_assignment:
        write_majority_assignment(cfg_path, out / "truth.tsv", out / "assignment.tsv")
    return cfg_path


def majority_assignment(segments, truth: dict[str, str]) -> dict[int, str]:
    """Planted group most members of each segment carry; ties go to the
    alphabetically first label."""
    out = {}
    for s in segments:
        votes = Counter(truth.get(a, "Other") for a in s.members)
        best = max(votes.values())
        out[s.id] = min(g for g, v in votes.items() if v == best)
    return out


def write_majority_assignment(config_path: Path, truth_path: Path, assignment_path: Path) -> None:
    from .clustering import load_segments
    from .config import validate_config
    from .pipeline import SEGMENTS, run_pipeline

    truth = {}
    for line in truth_path.read_text(encoding="utf-8").splitlines():
        if line and not line.startswith("#"):
            a, g = line.split("\t")
            truth[a] = g
    cfg = validate_config(config_path, check_files=False)
    cfg = cfg.__class__(**{**cfg.__dict__, "assignment": None})
    with tempfile.TemporaryDirectory() as tmp:
        cfg = cfg.with_overrides(output=tmp)
        run_pipeline(cfg, stages=("ingest", "snowball", "kcore", "cluster"))
        segments = load_segments(Path(tmp) / SEGMENTS)
    mapping = majority_assignment(segments, truth)
    with open(assignment_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("# segment_id\tgroup_label\n")
        for sid in sorted(mapping):
            fh.write(f"{sid}\t{mapping[sid]}\n")
