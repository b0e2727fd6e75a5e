#!/usr/bin/env python3
"""Regenerates the synthetic sample dataset under data/sample/."""
import csv
import random
from pathlib import Path

OUT = Path(__file__).resolve().parent.parent / "data" / "sample"

TOPICS = [
    ("Marco Rossi", "unemployment", "youth unemployment fell to 18 percent last year"),
    ("Giulia Bianchi", "pensions", "minimum pensions were raised by 50 euro per month"),
    ("Luca Ferrari", "taxes", "the flat tax lowered the burden on small businesses"),
    ("Anna Romano", "energy", "gas imports from abroad dropped by a third"),
    ("Paolo Greco", "healthcare", "hospital waiting lists doubled in the south"),
    ("Sara Conti", "schools", "teacher salaries are the lowest in western Europe"),
    ("Davide Gallo", "migration", "sea arrivals decreased by 40 percent in spring"),
    ("Elena Costa", "debt", "public debt passed 140 percent of gross domestic product"),
    ("Matteo Fontana", "transport", "high speed rail now reaches every regional capital"),
    ("Chiara Moretti", "housing", "rents in large cities grew twice as fast as wages"),
    ("Stefano Ricci", "crime", "reported burglaries fell for the fifth year in a row"),
    ("Laura Marino", "tourism", "foreign tourists spent a record amount last summer"),
    ("Andrea Bruno", "agriculture", "olive oil production collapsed after the drought"),
    ("Francesca Villa", "poverty", "one worker in eight lives below the poverty line"),
    ("Giorgio Serra", "exports", "exports to Asia overtook exports to America"),
]

FILLER = [
    "the ministry published its annual figures",
    "opposition leaders disputed the numbers during the debate",
    "analysts expect further revisions next quarter",
    "the regional council discussed the budget on Tuesday",
    "several newspapers covered the press conference",
    "critics argue the methodology changed over time",
    "the national statistics office released new data",
    "a parliamentary committee will review the report",
]

OFF_TOPIC = [
    "The football season opened with a surprising draw in Milan.",
    "A new exhibition of Renaissance paintings opened in Florence.",
    "Heavy snow closed several mountain passes in the Alps.",
    "The film festival awarded its main prize to a debut director.",
    "Local bakeries reported strong sales during the holidays.",
    "A rare bird species was spotted near the lagoon.",
    "The orchestra announced a tour across northern Europe.",
    "Engineers tested a new bridge design over the river.",
]


def mention_doc(rng, speaker, claim_body, topic):
    words = claim_body.split()
    cut = rng.randint(2, max(2, len(words) - 3))
    paraphrase = " ".join(words[cut:])
    if rng.random() < 0.35:
        # Paraphrase only: the claim never appears verbatim.
        parts = [
            f"On {topic}, the figures show {paraphrase}.",
            f"{rng.choice(FILLER).capitalize()}.",
            f"{rng.choice(FILLER).capitalize()}.",
        ]
    else:
        parts = [
            f"{speaker} said that {claim_body}.",
            f"According to {speaker}, {paraphrase} and {rng.choice(FILLER)}.",
            f"{rng.choice(FILLER).capitalize()}.",
        ]
    rng.shuffle(parts)
    return " ".join(parts)


def off_topic_doc(rng, speaker):
    parts = rng.sample(OFF_TOPIC, 2) + [f"{rng.choice(FILLER).capitalize()}."]
    if rng.random() < 0.4:
        # Same politician, unrelated subject.
        other = rng.choice(TOPICS)
        parts[0] = f"{speaker} visited the region to talk about {other[1]} and {rng.choice(FILLER)}."
    rng.shuffle(parts)
    return " ".join(parts)


def main():
    rng = random.Random(20240601)
    OUT.mkdir(parents=True, exist_ok=True)
    rows = []
    for i in range(60):
        speaker, topic, body = TOPICS[i % len(TOPICS)]
        claim = f"{speaker} claims that {body}."
        mention = i % 2 == 0
        text = mention_doc(rng, speaker, body, topic) if mention else off_topic_doc(rng, speaker)
        rows.append({
            "id": f"p{i + 1:03d}",
            "claim": claim,
            "text": text,
            "label": "Mention" if mention else "Off-topic",
            "claim_lang": "en",
            "text_lang": "en",
            "source": topic,
        })
    with open(OUT / "pairs.csv", "w", newline="", encoding="utf-8") as f:
        w = csv.DictWriter(f, fieldnames=list(rows[0].keys()), lineterminator="\n")
        w.writeheader()
        w.writerows(rows)

    categories = ["VERO", "FALSO", "RAGIONE A METÀ", "IMPRECISIONE", "ESAGERAZIONE", "OMISSIONE"]
    parties = ["Party A", "Party B", "Party C"]
    verdicts = []
    for i in range(240):
        speaker, topic, body = TOPICS[i % len(TOPICS)]
        day = 1 + (i * 7) % 28
        month = 1 + (i // 20) % 12
        year = 2020 + i // 120
        verdicts.append({
            "id": f"v{i + 1:03d}",
            "date": f"{year}-{month:02d}-{day:02d}",
            "verdict_text": f"{speaker} said {body}; the official data tell a different story in part.",
            "category": categories[rng.randrange(len(categories))],
            "party": parties[i % len(parties)],
            "source": topic,
        })
    with open(OUT / "verdicts.csv", "w", newline="", encoding="utf-8") as f:
        w = csv.DictWriter(f, fieldnames=list(verdicts[0].keys()), lineterminator="\n")
        w.writeheader()
        w.writerows(verdicts)


if __name__ == "__main__":
    main()
