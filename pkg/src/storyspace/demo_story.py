"""The Ember of Hollowpine: the synthetic five-stage fable shipped for demos.

Original text written for this package; five stages split on the story's key
events so stage-scoped knowledge has something real to accumulate.
"""

from __future__ import annotations

import json
from pathlib import Path

TITLE = "The Ember of Hollowpine"

CHARACTERS = [
    {
        "name": "Mara",
        "portrait": "portraits/mara.png",
        "persona": (
            "You are Mara, the lamplighter's apprentice of Hollowpine. You are "
            "earnest and stubborn, you count lamps on your fingers when you are "
            "nervous, and you never break a promise."
        ),
    },
    {
        "name": "Pip",
        "portrait": "portraits/pip.png",
        "persona": (
            "You are Pip, a quick-tongued fox who trades gossip for hazelnuts. "
            "You joke when you are frightened and you are frightened more often "
            "than you admit."
        ),
    },
    {
        "name": "Rowan",
        "portrait": "portraits/rowan.png",
        "persona": (
            "You are Elder Rowan, keeper of Hollowpine's ledger. You speak "
            "slowly, quote the old entries, and believe every debt is eventually "
            "paid."
        ),
    },
]

STAGES = [
    {
        "index": 1,
        "title": "The Apprentice",
        "duration_seconds": 40.0,
        "clip_reference": "clips/stage1.mp4",
        "slice": (
            "Hollowpine was a town of ninety-nine lamps and one Great Lantern, "
            "and every dusk old Tobin the lamplighter walked the crooked lanes "
            "with his brass pole. The winter he grew too stiff for the hill "
            "roads, he chose Mara, the cooper's daughter, as his apprentice. On "
            "her first round a fox with a singed tail trotted out of the hedge "
            "and demanded a toll of hazelnuts. The fox was called Pip, and by "
            "the ninth lamp he had appointed himself her guide, her critic, and "
            "her only friend on the cold walks."
        ),
        "transcript": (
            "TOBIN: Ninety-nine lamps, girl, and the Lantern makes the hundred.\n"
            "MARA: I can carry the pole. I promise I will not let one go dark.\n"
            "PIP: Promises taste better with hazelnuts. Toll, please.\n"
            "MARA: You again! Fine. One hazelnut per lamp.\n"
            "PIP: Then we shall be rich in light and poor in nuts."
        ),
    },
    {
        "index": 2,
        "title": "The Dimming",
        "duration_seconds": 45.0,
        "clip_reference": "clips/stage2.mp4",
        "slice": (
            "In the spring the Great Lantern on the square began to dim, though "
            "its wick was trimmed and its oil was clean. Elder Rowan opened the "
            "town ledger and read the oldest entry aloud: the Lantern does not "
            "burn oil, it burns an ember from the Heartwood, and an ember is a "
            "loan that must one day be renewed. The town voted to send nobody, "
            "because the Whisperwood was unkind to travelers. Mara packed a "
            "satchel that same night, and Pip, loudly protesting the whole "
            "idea, packed himself beside her."
        ),
        "transcript": (
            "ROWAN: The ledger says the ember is borrowed. Borrowed things are "
            "returned or renewed.\n"
            "MARA: Then someone has to walk to the Heartwood.\n"
            "PIP: Someone short, someone clever, someone who regrets this already.\n"
            "ROWAN: Take the ledger's copy page. The wood respects a debt "
            "honestly written."
        ),
    },
    {
        "index": 3,
        "title": "The Whisperwood",
        "duration_seconds": 50.0,
        "clip_reference": "clips/stage3.mp4",
        "slice": (
            "The Whisperwood repeated every word a traveler said, a heartbeat "
            "late and slightly wrong, so Mara and Pip walked in silence. At the "
            "river crossing an owl named Seren barred the way and gave them a "
            "warning: the Ashen King walked the wood again, a gray figure who "
            "breathed on fires to put them out, and he had smelled the ember "
            "page in Mara's satchel. Seren taught them the one safe answer to "
            "give the echoes, which was to say nothing and hold up a written "
            "word instead."
        ),
        "transcript": (
            "SEREN: Turn back, lamplighter. The Ashen King hunts warm things.\n"
            "MARA: I wrote my promise down. Will the wood read it?\n"
            "SEREN: The wood reads everything. That is the trouble with it.\n"
            "PIP: I would like it noted that I voted for staying home."
        ),
    },
    {
        "index": 4,
        "title": "The Hidden Grove",
        "duration_seconds": 55.0,
        "clip_reference": "clips/stage4.mp4",
        "slice": (
            "Past the river the pines opened on a hidden grove where the "
            "Heartwood stood, a tree with bark like cooled iron and a hollow "
            "full of sleeping embers. There Mara learned the truth of the loan: "
            "an ember is not taken, it is traded, one warm memory for one warm "
            "coal. The Ashen King arrived as she hesitated, and he was not a "
            "monster but the last lamplighter who had refused to trade and had "
            "gone cold waiting. Mara gave the Heartwood her ninety-nine lamps, "
            "the whole remembered walk of them, and took the brightest ember."
        ),
        "transcript": (
            "ASHEN KING: I kept my memories. See what keeping them kept me.\n"
            "MARA: Then I am sorry for you, but the town is colder than I am.\n"
            "PIP: Take the little one, Mara. The bright one. Hurry.\n"
            "MARA: One warm memory for one warm coal. Written and signed."
        ),
    },
    {
        "index": 5,
        "title": "The Hundredth Lamp",
        "duration_seconds": 42.0,
        "clip_reference": "clips/stage5.mp4",
        "slice": (
            "Mara came home having forgotten every lamp on her own round, and "
            "Pip walked the lanes with her for a week, reintroducing her to all "
            "ninety-nine by name and gossip. The new ember took in the Great "
            "Lantern with a sound like a held breath let go, and the square "
            "filled with the town's faces. Elder Rowan wrote the trade into the "
            "ledger and marked the debt renewed, and under the entry, in "
            "smaller letters, he wrote that the hundredth lamp of Hollowpine "
            "was the apprentice herself."
        ),
        "transcript": (
            "ROWAN: Debt renewed, witnessed, and worth it. So the ledger says.\n"
            "MARA: I don't remember the lamps. Isn't that strange? I remember you.\n"
            "PIP: Lamp forty-one leans left and owes me three hazelnuts. We begin "
            "there.\n"
            "ROWAN: Light finds its own way back. It always has."
        ),
    },
]


def write_source_corpus(directory: Path | str) -> Path:
    """Materialize the fable as a raw source corpus for `ingest`."""
    root = Path(directory)
    root.mkdir(parents=True, exist_ok=True)
    story = {
        "title": TITLE,
        "characters": CHARACTERS,
        "stages": [
            {"index": s["index"], "title": s["title"],
             "duration_seconds": s["duration_seconds"],
             "clip_reference": s["clip_reference"]}
            for s in STAGES
        ],
    }
    (root / "story.json").write_text(
        json.dumps(story, indent=2, ensure_ascii=False) + "\n", encoding="utf-8"
    )
    for s in STAGES:
        stage_dir = root / "stages" / f"stage_{s['index']:02d}"
        stage_dir.mkdir(parents=True, exist_ok=True)
        (stage_dir / "slice.txt").write_text(s["slice"] + "\n", encoding="utf-8")
        (stage_dir / "transcript.txt").write_text(s["transcript"] + "\n", encoding="utf-8")
    return root
