#!/usr/bin/env python3
"""Generate the committed test fixtures.

Run once from the repo root; outputs land under tests/fixtures/. The
perceptual-hash reference values are computed by scripts/phash_reference.py
(the exact-arithmetic oracle), not by the engine.

  images/            deterministic PNGs/JPEG + hashes.json
  probe_corpus.json  50 labeled response pairs for calibration
  demo_session/      recorded 100+ event session (mock provider)
  demo_golden_tree.json   canonical serialization of the demo tree
  ctxfmt_golden.txt  frozen render of a two-memory bundle
"""

import json
import random
import sys
from pathlib import Path

from PIL import Image

ROOT = Path(__file__).resolve().parent.parent
FIXTURES = ROOT / "tests" / "fixtures"
sys.path.insert(0, str(ROOT / "scripts"))

from phash_reference import reference_hash  # noqa: E402

from ctxmem.analyzer.mock import MockAnalyzer  # noqa: E402
from ctxmem.config import EngineConfig  # noqa: E402
from ctxmem.models import MemoryItem, Provenance  # noqa: E402
from ctxmem.retrieval import BundleEntry, ContextBundle, format_context  # noqa: E402
from ctxmem.session import SessionEngine  # noqa: E402
from ctxmem.tree import MemoryTree  # noqa: E402


# -- images --------------------------------------------------------------------


def save_png(path: Path, pixels, size):
    img = Image.new("RGB", size)
    img.putdata(pixels)
    img.save(path, format="PNG")


def make_images():
    out = FIXTURES / "images"
    out.mkdir(parents=True, exist_ok=True)

    gray = Image.new("RGB", (64, 64), (128, 128, 128))
    gray.save(out / "gray.png")

    w, h = 160, 100  # dims not divisible by 16: exercises fractional coverage
    gradient = [(int(255 * x / (w - 1)), int(255 * y / (h - 1)), 96)
                for y in range(h) for x in range(w)]
    save_png(out / "gradient.png", gradient, (w, h))

    checker = [((255, 255, 255) if (x // 8 + y // 8) % 2 == 0 else (0, 0, 0))
               for y in range(64) for x in range(64)]
    save_png(out / "checker.png", checker, (64, 64))

    rng = random.Random(20240901)
    noise_a = [(rng.randrange(256), rng.randrange(256), rng.randrange(256))
               for _ in range(120 * 90)]
    save_png(out / "noise_a.png", noise_a, (120, 90))
    noise_b = [(rng.randrange(256), rng.randrange(256), rng.randrange(256))
               for _ in range(120 * 90)]
    save_png(out / "noise_b.png", noise_b, (120, 90))

    # near-duplicate of noise_a: one small darkened square
    tweak = list(noise_a)
    for y in range(10, 18):
        for x in range(10, 18):
            r, g, b = tweak[y * 120 + x]
            tweak[y * 120 + x] = (r // 2, g // 2, b // 2)
    save_png(out / "noise_a_tweak.png", tweak, (120, 90))

    photo = Image.new("RGB", (80, 48))
    photo.putdata([(x * 3 % 256, (x + y) % 256, y * 5 % 256)
                   for y in range(48) for x in range(80)])
    photo.save(out / "photo.jpg", format="JPEG", quality=90)

    hashes = {p.name: reference_hash(p) for p in sorted(out.iterdir())
              if p.suffix in (".png", ".jpg")}
    (out / "hashes.json").write_text(json.dumps(hashes, indent=2, sort_keys=True) + "\n",
                                     encoding="utf-8")
    print("images:", ", ".join(hashes))


# -- probe corpus ------------------------------------------------------------------


TOPIC_SENTENCES = [
    "The itinerary covers Shinjuku, Asakusa, and a day trip to Hakone with a museum pass.",
    "Quarterly revenue grew eight percent while infrastructure spending stayed flat.",
    "The retrieval pipeline ranks candidates by lexical overlap before the rerank stage.",
    "Yeast fermentation benefits from a cooler first proof and a short warm final rise.",
    "The survey instrument uses seven-point scales anchored at strongly disagree.",
    "Garbage collection pauses dropped after tuning the nursery size and tenuring rate.",
    "The trail gains nine hundred meters over twelve kilometers with two water sources.",
    "Battery degradation accelerates when cells sit at full charge in high heat.",
    "The documentary traces the restoration of a seventeenth century merchant house.",
    "Index funds rebalance quarterly which creates predictable turnover windows.",
]


def _sentences(rng, count):
    parts = []
    for _ in range(count):
        base = rng.choice(TOPIC_SENTENCES)
        words = base.split()
        rng.shuffle(words)
        parts.append(" ".join(words))
    return " ".join(parts)


def make_probe_corpus():
    rng = random.Random(7141)
    pairs = []
    for i in range(25):  # substantively different: independent topic text
        pairs.append({
            "id": f"pair_{i:02d}",
            "a": _sentences(rng, 6),
            "b": _sentences(rng, 6),
            "substantive": True,
        })
    for i in range(25, 50):  # near-identical: same text, light tail edit
        text = _sentences(rng, 6)
        variant = text if i % 2 else text + " Overall the plan holds."
        pairs.append({"id": f"pair_{i:02d}", "a": text, "b": variant,
                      "substantive": False})
    doc = {"schema": "probe-corpus/1", "pairs": pairs,
           "notes": "synthetic fixture corpus; labels are constructed, not judged"}
    (FIXTURES / "probe_corpus.json").write_text(
        json.dumps(doc, ensure_ascii=False, indent=2) + "\n", encoding="utf-8")
    print("probe corpus: 50 pairs")


# -- golden context render ------------------------------------------------------------


def make_ctxfmt_golden():
    tree = MemoryTree("s_golden")
    prov = Provenance("Chrome", "Booking.com - Tokyo Hotels", "https://booking.example/tokyo")
    m1 = MemoryItem(
        id="mem_0001", source="observation", title="Tokyo Hotel Search",
        summary="Hotel search results for Tokyo with three bookmarked options.",
        context_sentence="User is browsing Booking.com searching for hotels in Tokyo",
        tags=["travel", "hotels", "tokyo"], provenance=prov,
        captured_at=1_700_000_000_000, sequence=1, perceptual_hash=None)
    m2 = MemoryItem(
        id="mem_0002", source="snippet", title="Trip Budget",
        summary="Japan trip budget breakdown with a 2000 dollar cap.",
        context_sentence="User is reviewing their Japan trip budget in Excel",
        tags=["travel", "budget", "japan"],
        provenance=Provenance("Excel", "Japan Trip Budget.xlsx", None),
        captured_at=1_700_000_100_000, sequence=2,
        raw_text="Flight $800 Food $350 Activities $200",
        user_memo="I need accommodation under $200 total")
    tree.memories = {m.id: m for m in (m1, m2)}
    bundle = ContextBundle([BundleEntry("memory", "mem_0002", True),
                            BundleEntry("memory", "mem_0001", False)])
    rendered = format_context(bundle, tree)
    (FIXTURES / "ctxfmt_golden.txt").write_text(rendered, encoding="utf-8")
    print("ctxfmt golden:", len(rendered), "chars")


# -- demo session -----------------------------------------------------------------------


class FakeClock:
    """Deterministic ms clock: starts at a fixed epoch, +1s per call."""

    def __init__(self, start=1_726_000_000_000):
        self.t = start

    def __call__(self):
        self.t += 1000
        return self.t


def tiny_png(seed: int, size=(48, 32)) -> bytes:
    import io
    rng = random.Random(seed)
    img = Image.new("RGB", size)
    img.putdata([(rng.randrange(256), rng.randrange(256), rng.randrange(256))
                 for _ in range(size[0] * size[1])])
    buf = io.BytesIO()
    img.save(buf, format="PNG")
    return buf.getvalue()


SNIPPETS = [
    ("Park Hyatt Tokyo runs 450 a night, Shibuya Excel 180, capsule stays 45.",
     "splurge versus saving for activities", "Chrome", "Booking.com - Tokyo Hotels"),
    ("Flight 800, food 350, activities 200, transport 150, shopping 300, cap 2000.",
     "need accommodation under 200 total", "Excel", "Japan Trip Budget.xlsx"),
    ("JR Pass seven day unlimited costs about 210 and covers Hakone trains.",
     "pass pays off if we do two long trips", "Chrome", "JR Pass - Japan Rail"),
    ("teamLab Planets tickets sell out two weeks ahead in cherry blossom season.",
     "book this the moment dates are fixed", "Chrome", "teamLab Planets Tickets"),
    ("Asakusa to Hakone is 110 minutes by Romancecar from Shinjuku.",
     None, "Maps", "Shinjuku to Hakone"),
    ("Agentic memory stores organize notes into branches with summaries and links.",
     "compare against flat retrieval baseline", "Preview", "memory-systems-survey.pdf"),
    ("Hierarchical placement sums relevance per group and argmaxes the total.",
     "this mirrors our placement rule exactly", "Preview", "memory-systems-survey.pdf"),
    ("Compression distance flags response pairs that diverge substantively.",
     "maybe use for regression testing too", "Preview", "similarity-metrics-notes.md"),
    ("Capsule Hotel Zen has лучшие reviews among budget stays near Ueno.",
     "non-ascii text path check", "Chrome", "Capsule Hotel Zen Reviews"),
    ("Shinkansen reserved seats open exactly one month before departure date.",
     "set a reminder for March 2", "Chrome", "Smart-EX Booking"),
    ("Ghibli Museum entry is lottery based for overseas visitors in spring.",
     "backup plan: Mitaka walk anyway", "Chrome", "Ghibli Museum Lottery"),
    ("Budget leftovers after fixed costs come to 200 for accommodation.",
     "capsule plus two business hotel nights fits", "Excel", "Japan Trip Budget.xlsx"),
]

OBSERVATIONS = [
    (101, "Chrome", "Tokyo hotels list - Booking.com"),
    (102, "Chrome", "Tokyo hotels deals - Booking.com"),   # semantically close to 101
    (103, "VS Code", "retrieval.py - ctxmem"),
    (104, "Terminal", "pytest run results"),
    (105, "Preview", "memory-systems-survey.pdf page 4"),
    (106, "Chrome", "Hakone ropeway timetable"),
]


def make_demo_session():
    import shutil

    demo_root = FIXTURES / "demo_session"
    if demo_root.exists():
        shutil.rmtree(demo_root)
    demo_root.mkdir(parents=True)

    clock = FakeClock()
    engine = SessionEngine.create(demo_root, MockAnalyzer(), EngineConfig(),
                                  session_id="s_demo", clock=clock)

    snippet_iter = iter(SNIPPETS)

    def snip(n):
        for _ in range(n):
            text, memo, app, window = next(snippet_iter)
            engine.capture_snippet(text=text, user_memo=memo,
                                   provenance=Provenance(app, window))

    # observations first: a probe on a snippet-free tree stays single-response
    for seed, app, window in OBSERVATIONS[:2]:
        engine.capture_observation(image=tiny_png(seed),
                                   provenance=Provenance(app, window))
    engine.chat("what hotels did I look at", probe=True)

    snip(4)
    # exact duplicate image: stage-1 discard
    engine.capture_observation(image=tiny_png(101),
                               provenance=Provenance("Chrome", "Tokyo hotels list - Booking.com"))
    for seed, app, window in OBSERVATIONS[2:]:
        engine.capture_observation(image=tiny_png(seed),
                                   provenance=Provenance(app, window))
    snip(4)

    # user reorganization
    tree = engine.tree
    snippet_ids = [m.id for m in tree.memories.values() if m.source == "snippet"]
    engine.group_memories(snippet_ids[:2], name="Travel Planning")
    engine.move_memory(snippet_ids[2], None)
    engine.move_memory(snippet_ids[2], tree.memory(snippet_ids[0]).branch_id)
    engine.edit_memory(snippet_ids[1], tags=["travel", "budget", "japan", "planning"])
    obs_ids = [m.id for m in tree.memories.values() if m.source == "observation"]
    engine.set_visibility(obs_ids[-1], hidden=False, archived=True)

    engine.chat("compare the hotel options against my budget cap",
                explicit_memory_ids=[snippet_ids[0]])

    snip(4)
    engine.reorg("group these by project")

    # probe chat that should trigger the side-by-side pair
    result = engine.chat("summarize my trip plan and the key research notes",
                         probe=True)
    assert result["pendingChoice"], "demo probe chat should trigger the pair"
    engine.resolve_probe_choice(result["queryId"], "A")

    engine.chat("which tickets need booking ahead")
    engine.set_visibility(obs_ids[0], hidden=True, archived=False)
    engine.set_visibility(obs_ids[0], hidden=False, archived=False)
    empty = [b.id for b in engine.tree.branches.values()
             if not engine.tree.members(b.id)]
    if empty:
        engine.delete_branch(empty[0])

    events = engine.store.read_events()
    assert len(events) >= 100, f"demo session too small: {len(events)} events"
    golden = engine.tree.canonical_json()
    (FIXTURES / "demo_golden_tree.json").write_text(golden + "\n", encoding="utf-8")
    print(f"demo session: {len(events)} events, golden tree {len(golden)} bytes, "
          f"{len(engine.tree.memories)} memories, {len(engine.tree.branches)} branches")


def main():
    FIXTURES.mkdir(parents=True, exist_ok=True)
    make_images()
    make_probe_corpus()
    make_ctxfmt_golden()
    make_demo_session()
    return 0


if __name__ == "__main__":
    sys.exit(main())
