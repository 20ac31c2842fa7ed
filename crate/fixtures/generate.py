#!/usr/bin/env python3
"""Regenerates the synthetic experiment fixtures and training corpus.

    python3 fixtures/generate.py

Output is deterministic. Items are synthetic; real item sets load from the
same schema.
"""

import json
import random
from pathlib import Path

OUT = Path(__file__).resolve().parent

EMBED_DET = ["my", "our", "the", "her", "his", "your", "their"]
EMBED_ADJ = ["older", "young", "new", "kind", "quiet", "clever", "tired"]
EMBED_N = ["brother", "sister", "teacher", "neighbor", "cousin", "friend", "doctor"]
EMBED_V = ["said", "claimed", "thought", "believed", "heard"]

AGENTS = ["the baker", "the farmer", "the dancer", "the pilot", "the sailor", "the painter", "the nurse",
          "the lawyer", "the singer", "the writer", "the tailor", "the driver", "the student", "the mayor",
          "the chef", "the poet", "the judge", "the banker", "the guard", "the miner", "the clerk",
          "the hunter", "the waiter", "the actor"]
GOALS = ["the guest", "the child", "the visitor", "the stranger", "the manager", "the officer", "the owner",
         "the tourist", "the reporter", "the customer", "the teacher", "the soldier", "the patient",
         "the captain", "the artist", "the priest", "the player", "the boss", "the queen", "the king",
         "the doctor", "the baby", "the widow", "the monk"]
THINGS = ["the painting", "the letter", "the basket", "the lamp", "the map", "the ticket", "the coin",
          "the photo", "the recipe", "the scarf", "the bottle", "the candle", "the package", "the key",
          "the ring", "the book", "the cake", "the hat", "the clock", "the vase", "the gift", "the box",
          "the rope", "the shell"]
DITRANS = ["showed", "gave", "sold", "handed", "offered", "sent", "brought", "lent", "mailed", "passed",
           "threw", "read"]
ENDINGS = ["last week .", "yesterday .", "this morning .", "at noon .", "on sunday .", "last night .",
           "after lunch .", "before dinner ."]

SHORT_MOD = ["from the south", "with the hat", "near the river", "by the door", "in the garden",
             "from the city", "with the dog"]
MEDIUM_MOD = ["from the south of sunny france", "with the old hat on his head",
              "near the river by the mill", "who lived by the old door",
              "in the garden behind the house", "from the city across the sea",
              "with the dog and the cat"]
LONG_MOD = ["from the south of france who had traveled for many long days",
            "with the old hat that his grandmother had knitted for him",
            "who lived near the river by the mill in the small valley",
            "that my grandmother had seen in the forest near her house",
            "who had worked in the garden behind the house every single summer",
            "from the city across the sea where the ships come in",
            "with the dog that barked at every stranger on the street"]

ANIMALS = [("the lion", "the gazelle", "the cub"), ("the wolf", "the rabbit", "the pup"),
           ("the eagle", "the fish", "the chick"), ("the bear", "the salmon", "the cub"),
           ("the fox", "the hen", "the kit"), ("the tiger", "the deer", "the cub"),
           ("the owl", "the mouse", "the owlet")]


def embed(rng):
    return " ".join([rng.choice(EMBED_DET), rng.choice(EMBED_ADJ), rng.choice(EMBED_N), rng.choice(EMBED_V)])


def region(label, text=None, **cases):
    if text is not None:
        return {"label": label, "text": text}
    return {"label": label, "by_condition": cases["by"]}


def write(name, exp):
    (OUT / f"{name}.json").write_text(json.dumps(exp, indent=2) + "\n")


WH_FACTORS = [{"name": "wh", "levels": ["that", "wh"]}, {"name": "gap", "levels": ["nogap", "gap"]}]


def flexibility():
    rng = random.Random(31)
    items = []
    for i in range(21):
        agent, goal, thing = AGENTS[i], GOALS[i], THINGS[i]
        items.append({"id": i + 1, "regions": [
            region("prefix", "I know"),
            region("comp", by={"wh=that": "that", "wh=wh": "who", "wh=wh,position=obj": "what"}),
            region("embed", embed(rng)),
            region("subj", by={"*": agent, "gap=gap,position=subj": ""}),
            region("verb", rng.choice(DITRANS)),
            region("obj", by={"*": thing, "gap=gap,position=obj": ""}),
            region("prep", "to"),
            region("goal", by={"*": goal, "gap=gap,position=pp": ""}),
            region("end", rng.choice(ENDINGS)),
        ]})
    write("flexibility", {
        "name": "flexibility",
        "factors": WH_FACTORS + [{"name": "position", "levels": ["subj", "obj", "pp"]}],
        "measurements": [
            {"name": "post_subj", "regions": ["verb"]},
            {"name": "post_obj", "regions": ["prep"]},
            {"name": "post_pp", "regions": ["end"]},
            {"name": "clause", "regions": ["subj", "verb", "obj", "prep", "goal", "end"]},
        ],
        "items": items,
        "analyses": [
            {"name": "subject_gap", "kind": "interaction", "measurement": "post_subj", "only": {"position": ["subj"]}},
            {"name": "object_gap", "kind": "interaction", "measurement": "post_obj", "only": {"position": ["obj"]}},
            {"name": "pp_gap", "kind": "interaction", "measurement": "post_pp", "only": {"position": ["pp"]}},
            {"name": "clause", "kind": "interaction", "measurement": "clause"},
            {"name": "position_contrast", "kind": "contrast", "measurement": "clause", "factor": "position",
             "baseline": "obj"},
        ],
    })


def length():
    rng = random.Random(32)
    items = []
    for i in range(21):
        hunter, prey, young = ANIMALS[i % len(ANIMALS)]
        k = i % len(SHORT_MOD)
        items.append({"id": i + 1, "regions": [
            region("prefix", "I know"),
            region("comp", by={"wh=that": "that", "wh=wh": "what", "wh=wh,position=goal": "who"}),
            region("embed", embed(rng)),
            region("subj", hunter),
            region("modifier", by={"length=none": "", "length=short": SHORT_MOD[k],
                                   "length=medium": MEDIUM_MOD[k], "length=long": LONG_MOD[k]}),
            region("verb", rng.choice(["gave", "brought", "carried", "threw"])),
            region("obj", by={"*": prey, "gap=gap,position=obj": ""}),
            region("prep", "to"),
            region("goal", by={"*": young, "gap=gap,position=goal": ""}),
            region("end", rng.choice(["at sunrise .", "at dusk .", "in the morning .", "after the storm ."])),
        ]})
    write("length", {
        "name": "length",
        "factors": WH_FACTORS + [{"name": "length", "levels": ["none", "short", "medium", "long"]},
                                 {"name": "position", "levels": ["obj", "goal"]}],
        "measurements": [
            {"name": "post_obj", "regions": ["prep"]},
            {"name": "post_goal", "regions": ["end"]},
            {"name": "clause", "regions": ["verb", "obj", "prep", "goal", "end"]},
        ],
        "intervener_regions": ["modifier"],
        "items": items,
        "analyses": [
            {"name": "object_gap", "kind": "interaction", "measurement": "post_obj", "only": {"position": ["obj"]}},
            {"name": "goal_gap", "kind": "interaction", "measurement": "post_goal", "only": {"position": ["goal"]}},
            {"name": "object_slope", "kind": "length_slope", "measurement": "post_obj", "factor": "length",
             "only": {"position": ["obj"]}},
            {"name": "goal_slope", "kind": "length_slope", "measurement": "post_goal", "factor": "length",
             "only": {"position": ["goal"]}},
        ],
    })


def double_gap():
    rng = random.Random(33)
    items = []
    for i in range(21):
        thing = THINGS[i]
        items.append({"id": i + 1, "regions": [
            region("prefix", "I know"),
            region("comp", by={"wh=that": "that", "wh=wh": "what"}),
            region("subj", AGENTS[i] + " who wanted to"),
            region("verb1", rng.choice(["buy", "sell", "steal", "borrow", "find"])),
            region("gap1", by={"*": thing, "gap=gap,site=first": "", "gap=gap,site=both": ""}),
            region("adv", rng.choice(["last year", "last month", "this spring", "in june"])),
            region("verb2", rng.choice(["destroyed", "broke", "burned", "lost", "hid"])),
            region("gap2", by={"*": thing, "gap=gap,site=second": "", "gap=gap,site=both": ""}),
            region("end", rng.choice(["in the garage .", "at the market .", "by accident .", "on purpose ."])),
        ]})
    write("double_gap", {
        "name": "double_gap",
        "factors": WH_FACTORS + [{"name": "site", "levels": ["first", "second", "both"]}],
        "measurements": [
            {"name": "post_first", "regions": ["adv"]},
            {"name": "post_second", "regions": ["end"]},
        ],
        "items": items,
        "analyses": [
            {"name": "first_gap", "kind": "interaction", "measurement": "post_first",
             "only": {"site": ["first", "both"]}},
            {"name": "second_gap", "kind": "interaction", "measurement": "post_second",
             "only": {"site": ["second", "both"]}},
        ],
    })


def wh_island():
    rng = random.Random(34)
    items = []
    for i in range(24):
        hunter, prey, _ = ANIMALS[i % len(ANIMALS)]
        items.append({"id": i + 1, "regions": [
            region("prefix", "I know"),
            region("comp", by={"wh=that": "that", "wh=wh": "what"}),
            region("embed", embed(rng)),
            region("island", by={"island=none": "that", "island=whether": "whether",
                                 "island=who": "who"}),
            region("subj", hunter if i % 3 else "someone"),
            region("verb", rng.choice(["devoured", "chased", "caught", "attacked"])),
            region("obj", by={"*": prey, "gap=gap": ""}),
            region("end", rng.choice(["at sunrise .", "at dusk .", "yesterday .", "in the valley ."])),
        ]})
    write("wh_island", {
        "name": "wh_island",
        "factors": WH_FACTORS + [{"name": "island", "levels": ["none", "whether", "who"]}],
        "gap_region": "obj",
        "measurements": [{"name": "clause", "regions": ["obj", "end"]}],
        "items": items,
        "analyses": [
            {"name": "interaction", "kind": "interaction", "measurement": "post_gap"},
            {"name": "island_contrast", "kind": "contrast", "measurement": "post_gap", "factor": "island",
             "baseline": "none"},
        ],
    })


def adjunct():
    rng = random.Random(35)
    items = []
    frames = {"island=none": "said that she", "island=after": "laughed after she",
              "island=while": "laughed while she", "island=despite": "laughed despite the fact that she"}
    for i in range(20):
        items.append({"id": i + 1, "regions": [
            region("prefix", "I know"),
            region("comp", by={"wh=that": "that", "wh=wh": "what"}),
            region("subj", GOALS[i]),
            region("frame", by=frames),
            region("verb", rng.choice(["put", "placed", "left", "dropped"])),
            region("obj", by={"*": THINGS[i], "gap=gap": ""}),
            region("post", rng.choice(["on the shelf", "in the drawer", "by the window", "under the bed"])),
            region("end", "."),
        ]})
    write("adjunct", {
        "name": "adjunct",
        "factors": WH_FACTORS + [{"name": "island", "levels": ["none", "after", "while", "despite"]}],
        "gap_region": "obj",
        "items": items,
        "analyses": [
            {"name": "interaction", "kind": "interaction", "measurement": "post_gap"},
            {"name": "island_contrast", "kind": "contrast", "measurement": "post_gap", "factor": "island",
             "baseline": "none"},
        ],
    })


def complex_np():
    rng = random.Random(36)
    items = []
    for i in range(21):
        thing = THINGS[i]
        writer, editor = AGENTS[i], GOALS[i]
        pre = {
            "island=none": f"{editor} believed that {writer} wrote about",
            "island=complex_np": f"{editor} believed the rumor that {writer} wrote about",
            "island=subject": "the story about",
        }
        post = {
            "island=none": rng.choice(["last year", "in secret", "last spring"]),
            "island=complex_np": "last year",
            "island=subject": f"surprised {editor}",
        }
        post["island=complex_np"] = post["island=none"]
        items.append({"id": i + 1, "regions": [
            region("prefix", "I know"),
            region("comp", by={"wh=that": "that", "wh=wh": "what"}),
            region("pre", by=pre),
            region("gap", by={"*": thing, "gap=gap": ""}),
            region("post", by=post),
            region("end", "."),
        ]})
    write("complex_np", {
        "name": "complex_np",
        "factors": WH_FACTORS + [{"name": "island", "levels": ["none", "complex_np", "subject"]}],
        "gap_region": "gap",
        "items": items,
        "analyses": [
            {"name": "interaction", "kind": "interaction", "measurement": "post_gap"},
            {"name": "island_contrast", "kind": "contrast", "measurement": "post_gap", "factor": "island",
             "baseline": "none"},
        ],
    })


def corpus(n_tokens=30000):
    rng = random.Random(37)
    nps = AGENTS + GOALS + THINGS + [a for t in ANIMALS for a in t]
    mods = SHORT_MOD + MEDIUM_MOD
    lines, count = [], 0

    def np_():
        s = rng.choice(nps)
        if rng.random() < 0.15:
            s += " " + rng.choice(mods)
        return s

    templates = [
        lambda: f"{np_()} {rng.choice(DITRANS)} {np_()} to {np_()} {rng.choice(ENDINGS)}",
        lambda: f"I know that {embed(rng)} {np_()} {rng.choice(DITRANS)} {np_()} to {np_()} {rng.choice(ENDINGS)}",
        lambda: f"I know who {embed(rng)} {rng.choice(DITRANS)} {np_()} to {np_()} {rng.choice(ENDINGS)}",
        lambda: f"I know what {np_()} {rng.choice(['devoured', 'chased', 'caught', 'found'])} {rng.choice(ENDINGS)}",
        lambda: f"{np_()} said that {np_()} {rng.choice(['put', 'left', 'dropped'])} {np_()} on the shelf .",
        lambda: f"{np_()} laughed after she {rng.choice(['put', 'placed'])} {np_()} in the drawer .",
        lambda: f"{np_()} wondered whether {np_()} {rng.choice(['chased', 'attacked'])} {np_()} at dusk .",
        lambda: f"the story about {np_()} surprised {np_()} last year .",
        lambda: f"{np_()} who wanted to buy {np_()} last year lost {np_()} by accident .",
    ]
    while count < n_tokens:
        s = rng.choice(templates)()
        lines.append(s)
        count += len(s.split())
    (OUT / "corpus.txt").write_text("\n".join(lines) + "\n")
    return count


if __name__ == "__main__":
    flexibility()
    length()
    double_gap()
    wh_island()
    adjunct()
    complex_np()
    print(f"corpus: {corpus()} tokens")
