#!/usr/bin/env python3
"""Regenerates the bundled mini-dataset under data/.

Entities are listed in text order as (surface, type); offsets are located by
scanning forward, so they are exact byte offsets into the UTF-8 text.
"""
import json
import random
import re
from pathlib import Path

HERE = Path(__file__).resolve().parent


def term(var, coeff=None):
    line = f"<VAR> {var} </VAR>"
    if coeff is not None:
        line += f" [TIMES] <PARAM> {coeff} </PARAM>"
    return line


def objective(direction, name, terms):
    lines = ["<DECLARATION>", f"<OBJ_DIR> {direction} </OBJ_DIR>", f"<OBJ_NAME> {name} </OBJ_NAME> [is]"]
    lines += [term(*t) for t in terms]
    lines.append("</DECLARATION>")
    return lines


def constraint(direction, op, ctype, terms=(), limit=None, rhs=None):
    lines = ["<DECLARATION>", f"<CONST_DIR> {direction} </CONST_DIR>", f"<OPERATOR> {op} </OPERATOR>"]
    if limit is not None:
        lines.append(f"<LIMIT> {limit} </LIMIT>")
    if rhs is None:
        lines.append(f"<CONST_TYPE> [{ctype}] </CONST_TYPE> [is]")
        lines += [term(*t) for t in terms]
    else:
        lines.append(f"<CONST_TYPE> [{ctype}] </CONST_TYPE>")
        lines.append(term(*terms[0]) + " [is] " + term(*rhs))
    lines.append("</DECLARATION>")
    return lines


def mapping(*blocks):
    lines = ["<s>"]
    for b in blocks:
        lines += b
    lines.append("</s>")
    return "\n".join(lines) + "\n"


PROBLEMS = [
    {
        "id": "coconuts",
        "text": "A farmer moves coconuts with rickshaws and ox carts. A rickshaw trip carries 50 coconuts "
                "and an ox cart trip carries 30 coconuts. Each rickshaw trip costs $10 and each ox cart trip "
                "costs $8, and the farmer can spend at most $200 on trips. The number of ox carts must not "
                "exceed the number of rickshaws. How many trips of each should be made to maximize the "
                "number of coconuts moved?",
        "entities": [("rickshaws", "VAR"), ("ox carts", "VAR"), ("rickshaw", "VAR"), ("50", "PARAM"),
                     ("ox cart", "VAR"), ("30", "PARAM"), ("rickshaw", "VAR"), ("10", "PARAM"),
                     ("ox cart", "VAR"), ("8", "PARAM"), ("at most", "CONST_DIR"), ("200", "LIMIT"),
                     ("ox carts", "VAR"), ("must not exceed", "CONST_DIR"), ("rickshaws", "VAR"),
                     ("maximize", "OBJ_DIR"), ("number of coconuts", "OBJ_NAME")],
        "mapping": mapping(
            objective("maximize", "number of coconuts", [("rickshaws", "50"), ("ox carts", "30")]),
            constraint("at most", "LESS_OR_EQUAL", "LINEAR_CONSTRAINT", [("rickshaws", "10"), ("ox carts", "8")],
                       limit="200"),
            constraint("must not exceed", "LESS_OR_EQUAL", "XY_CONSTRAINT", [("ox carts",)], rhs=("rickshaws",))),
    },
    {
        "id": "bakery",
        "text": "A bakery makes muffins and scones. Each muffin needs 2 minutes of oven time and each scone "
                "needs 3 minutes, and there are at most 600 minutes available. The bakery must make at "
                "least 50 muffins. At most 40% of all items can be scones. The profit is $1.5 per muffin "
                "and $2 per scone. How many of each should be made to maximize profit?",
        "entities": [("muffins", "VAR"), ("scones", "VAR"), ("muffin", "VAR"), ("2", "PARAM"), ("scone", "VAR"),
                     ("3", "PARAM"), ("at most", "CONST_DIR"), ("600", "LIMIT"), ("at least", "CONST_DIR"),
                     ("50", "LIMIT"), ("muffins", "VAR"), ("At most", "CONST_DIR"), ("40%", "LIMIT"),
                     ("scones", "VAR"), ("1.5", "PARAM"), ("muffin", "VAR"), ("2", "PARAM"), ("scone", "VAR"),
                     ("maximize", "OBJ_DIR"), ("profit", "OBJ_NAME")],
        "mapping": mapping(
            objective("maximize", "profit", [("muffins", "1.5"), ("scones", "2")]),
            constraint("at most", "LESS_OR_EQUAL", "LINEAR_CONSTRAINT", [("muffins", "2"), ("scones", "3")],
                       limit="600"),
            constraint("at least", "GREATER_OR_EQUAL", "LOWER_BOUND", [("muffins",)], limit="50"),
            constraint("At most", "LESS_OR_EQUAL", "RATIO_CONSTRAINT", [("scones",)], limit="40%")),
    },
    {
        "id": "feed",
        "text": "A rancher mixes corn and hay into cattle feed. A kilogram of corn costs $0.32 and a kilogram "
                "of hay costs $0.18. The mix must contain at least 1,000 kilograms in total. The amount of "
                "corn should be at least twice the amount of hay. No more than 700 kilograms of corn can be "
                "bought. How many kilograms of each should be used to minimize cost?",
        "entities": [("corn", "VAR"), ("hay", "VAR"), ("corn", "VAR"), ("0.32", "PARAM"), ("hay", "VAR"),
                     ("0.18", "PARAM"), ("at least", "CONST_DIR"), ("1,000", "LIMIT"), ("corn", "VAR"),
                     ("at least", "CONST_DIR"), ("twice", "PARAM"), ("hay", "VAR"),
                     ("No more than", "CONST_DIR"), ("700", "LIMIT"), ("corn", "VAR"), ("minimize", "OBJ_DIR"),
                     ("cost", "OBJ_NAME")],
        "mapping": mapping(
            objective("minimize", "cost", [("corn", "0.32"), ("hay", "0.18")]),
            constraint("at least", "GREATER_OR_EQUAL", "SUM_CONSTRAINT", [("corn",), ("hay",)], limit="1,000"),
            constraint("at least", "GREATER_OR_EQUAL", "XBY_CONSTRAINT", [("corn",)], rhs=("hay", "2")),
            constraint("No more than", "LESS_OR_EQUAL", "UPPER_BOUND", [("corn",)], limit="700")),
    },
    {
        "id": "furniture",
        "text": "A workshop builds tables and chairs. A table takes 5 hours of labor and a chair takes 2 hours "
                "of labor, and the workshop has at most 120 hours of labor each week. A table uses 8 units of "
                "wood and a chair uses 3 units, with at most 200 units of wood available. At least 10 chairs "
                "must be built. A table earns $90 and a chair earns $35. How many of each should be built to "
                "maximize earnings?",
        "entities": [("tables", "VAR"), ("chairs", "VAR"), ("table", "VAR"), ("5", "PARAM"), ("chair", "VAR"),
                     ("2", "PARAM"), ("at most", "CONST_DIR"), ("120", "LIMIT"), ("table", "VAR"),
                     ("8", "PARAM"), ("chair", "VAR"), ("3", "PARAM"), ("at most", "CONST_DIR"),
                     ("200", "LIMIT"), ("At least", "CONST_DIR"), ("10", "LIMIT"), ("chairs", "VAR"),
                     ("table", "VAR"), ("90", "PARAM"), ("chair", "VAR"), ("35", "PARAM"),
                     ("maximize", "OBJ_DIR"), ("earnings", "OBJ_NAME")],
        "mapping": mapping(
            objective("maximize", "earnings", [("tables", "90"), ("chairs", "35")]),
            constraint("at most", "LESS_OR_EQUAL", "LINEAR_CONSTRAINT", [("tables", "5"), ("chairs", "2")],
                       limit="120"),
            constraint("at most", "LESS_OR_EQUAL", "LINEAR_CONSTRAINT", [("tables", "8"), ("chairs", "3")],
                       limit="200"),
            constraint("At least", "GREATER_OR_EQUAL", "LOWER_BOUND", [("chairs",)], limit="10")),
    },
    {
        "id": "ads",
        "text": "A shop advertises on radio and television. A radio spot reaches 2,000 viewers and a "
                "television spot reaches 9,000 viewers. A radio spot costs $300 and a television spot costs "
                "$1,200, and the budget is at most $12,000. The number of radio spots must be at least the "
                "number of television spots. At most 8 television spots can be booked. How many spots of "
                "each kind should be bought to maximize the number of viewers?",
        "entities": [("radio", "VAR"), ("television", "VAR"), ("radio", "VAR"), ("2,000", "PARAM"),
                     ("television", "VAR"), ("9,000", "PARAM"), ("radio", "VAR"), ("300", "PARAM"),
                     ("television", "VAR"), ("1,200", "PARAM"), ("at most", "CONST_DIR"), ("12,000", "LIMIT"),
                     ("radio", "VAR"), ("at least", "CONST_DIR"), ("television", "VAR"), ("At most", "CONST_DIR"),
                     ("8", "LIMIT"), ("television", "VAR"), ("maximize", "OBJ_DIR"),
                     ("number of viewers", "OBJ_NAME")],
        "mapping": mapping(
            objective("maximize", "number of viewers", [("radio", "2,000"), ("television", "9,000")]),
            constraint("at most", "LESS_OR_EQUAL", "LINEAR_CONSTRAINT", [("radio", "300"), ("television", "1,200")],
                       limit="12,000"),
            constraint("at least", "GREATER_OR_EQUAL", "XY_CONSTRAINT", [("radio",)], rhs=("television",)),
            constraint("At most", "LESS_OR_EQUAL", "UPPER_BOUND", [("television",)], limit="8")),
    },
    {
        "id": "garden",
        "text": "A gardener plants tulips and roses on at most 50 square meters. Tulips earn $4 per square "
                "meter and roses earn $7 per square meter. At least 30% of the area must be tulips. How many "
                "square meters of each should be planted to maximize revenue?",
        "entities": [("tulips", "VAR"), ("roses", "VAR"), ("at most", "CONST_DIR"), ("50", "LIMIT"),
                     ("Tulips", "VAR"), ("4", "PARAM"), ("roses", "VAR"), ("7", "PARAM"),
                     ("At least", "CONST_DIR"), ("30%", "LIMIT"), ("tulips", "VAR"), ("maximize", "OBJ_DIR"),
                     ("revenue", "OBJ_NAME")],
        "mapping": mapping(
            objective("maximize", "revenue", [("tulips", "4"), ("roses", "7")]),
            constraint("at most", "LESS_OR_EQUAL", "SUM_CONSTRAINT", [("tulips",), ("roses",)], limit="50"),
            constraint("At least", "GREATER_OR_EQUAL", "RATIO_CONSTRAINT", [("tulips",)], limit="30%")),
    },
    {
        "id": "vitamins",
        "text": "A patient takes pill A and pill B. Pill A contains 3 units of vitamin C and pill B contains 5 "
                "units, and the patient needs at least 60 units of vitamin C. Pill A costs $0.25 and pill B "
                "costs $0.40. The patient can take at most 15 of pill A. How many of each pill minimizes the "
                "total cost?",
        "entities": [("pill A", "VAR"), ("pill B", "VAR"), ("Pill A", "VAR"), ("3", "PARAM"), ("pill B", "VAR"),
                     ("5", "PARAM"), ("at least", "CONST_DIR"), ("60", "LIMIT"), ("Pill A", "VAR"),
                     ("0.25", "PARAM"), ("pill B", "VAR"), ("0.40", "PARAM"), ("at most", "CONST_DIR"),
                     ("15", "LIMIT"), ("pill A", "VAR"), ("minimizes", "OBJ_DIR"), ("total cost", "OBJ_NAME")],
        "mapping": mapping(
            objective("minimizes", "total cost", [("pill A", "0.25"), ("pill B", "0.40")]),
            constraint("at least", "GREATER_OR_EQUAL", "LINEAR_CONSTRAINT", [("pill A", "3"), ("pill B", "5")],
                       limit="60"),
            constraint("at most", "LESS_OR_EQUAL", "UPPER_BOUND", [("pill A",)], limit="15")),
    },
    {
        "id": "shipping",
        "text": "A company ships small boxes and large boxes. It can ship at most 400 boxes in total. Small boxes "
                "earn $3 and large boxes earn $5. The number of large boxes can be at most three times the "
                "number of small boxes. How many of each should be shipped to maximize earnings?",
        "entities": [("small boxes", "VAR"), ("large boxes", "VAR"), ("at most", "CONST_DIR"), ("400", "LIMIT"),
                     ("Small boxes", "VAR"), ("3", "PARAM"), ("large boxes", "VAR"), ("5", "PARAM"),
                     ("large boxes", "VAR"), ("at most", "CONST_DIR"), ("three", "PARAM"),
                     ("small boxes", "VAR"), ("maximize", "OBJ_DIR"), ("earnings", "OBJ_NAME")],
        "mapping": mapping(
            objective("maximize", "earnings", [("small boxes", "3"), ("large boxes", "5")]),
            constraint("at most", "LESS_OR_EQUAL", "SUM_CONSTRAINT", [("small boxes",), ("large boxes",)],
                       limit="400"),
            constraint("at most", "LESS_OR_EQUAL", "XBY_CONSTRAINT", [("large boxes",)], rhs=("small boxes", "3"))),
    },
]

TOKEN_RE = re.compile(r"\d+(?:,\d{3})*(?:\.\d+)?%?|\w+|[^\w\s]")


def locate(text, entities):
    spans, cursor = [], 0
    for surface, etype in entities:
        m = re.compile(r"(?<![\w.,])" + re.escape(surface) + r"(?![\w%]|[.,]\d)").search(text, cursor)
        at = m.start() if m else -1
        if at < 0:
            raise SystemExit(f"entity {surface!r} not found after offset {cursor}")
        start = len(text[:at].encode())
        spans.append({"start": start, "end": start + len(surface.encode()), "type": etype})
        cursor = at + len(surface)
    return spans


def tokenize(text):
    return [(m.group(), m.start(), m.end()) for m in TOKEN_RE.finditer(text)]


def bio(tokens, spans):
    labels = ["O"] * len(tokens)
    for s in spans:
        inside = [k for k, (_, a, b) in enumerate(tokens) if a >= s["start"] and b <= s["end"]]
        if not inside:
            raise SystemExit(f"span {s} does not cover a token")
        labels[inside[0]] = "B-" + s["type"]
        for k in inside[1:]:
            labels[k] = "I-" + s["type"]
    return labels


def noisy(labels, rate, rng, types):
    out = list(labels)
    for k in range(len(out)):
        if rng.random() < rate:
            choice = rng.choice(["O"] + [p + t for t in types for p in ("B-", "I-")])
            out[k] = choice
    return out


def main():
    rng = random.Random(7)
    types = ["VAR", "PARAM", "LIMIT", "CONST_DIR", "OBJ_DIR", "OBJ_NAME"]
    problems, conll, preds = [], [], {"tagger_a": [], "tagger_b": [], "tagger_c": []}
    for p in PROBLEMS:
        spans = locate(p["text"], p["entities"])
        problems.append({"id": p["id"], "text": p["text"], "entities": spans, "mapping": p["mapping"]})
        tokens = tokenize(p["text"])
        labels = bio(tokens, spans)
        conll.append(f"# id: {p['id']}\n" + "".join(f"{t}\t{l}\n" for (t, _, _), l in zip(tokens, labels)))
        for name in preds:
            preds[name].append({"sentence_id": p["id"], "labels": noisy(labels, 0.1, rng, types)})
    with open(HERE / "problems.jsonl", "w") as f:
        for p in problems:
            f.write(json.dumps(p) + "\n")
    (HERE / "problems.conll").write_text("\n".join(conll))
    (HERE / "coconuts.txt").write_text(PROBLEMS[0]["mapping"])
    for name, rows in preds.items():
        with open(HERE / f"{name}.jsonl", "w") as f:
            for r in rows:
                f.write(json.dumps(r) + "\n")


if __name__ == "__main__":
    main()
