"""Regenerates the synthetic fixtures in this directory.

Texts are drawn from the same small vocabulary the mock backend uses, so the
tiny lexica in lexica/ give non-degenerate scores for both sides.
"""
import json
import os
import random

HERE = os.path.dirname(os.path.abspath(__file__))

FILLER = "the we it was that then there about when with thing just would could really think because also very time".split()
INFORMAL = "yeah lol gonna kinda haha wanna dude ok um nah".split()
YOUNG = "college class roommate campus exam dorm".split()
OLD = "mortgage kids career retirement grandkids marriage".split()
FEMALE = "love cute excited sister hair mom".split()
MALE = "game bro league beer truck buddy".split()
POSITIVE = "happy great fun glad enjoy awesome".split()
NEGATIVE = "sad tired stress worried upset awful".split()
TOPICS = [
    "cooking pasta recipe dinner".split(),
    "hiking trail mountain camping".split(),
    "music concert guitar band".split(),
    "movies cinema actor sequel".split(),
]


def write(path, text):
    os.makedirs(os.path.dirname(path), exist_ok=True)
    with open(path, "w") as f:
        f.write(text)


def utterance(rng, age, sex, affect, topic):
    n = rng.randint(3, 15)
    words = []
    for _ in range(n):
        r = rng.random()
        if r < 0.3:
            words.append(rng.choice(INFORMAL))
        elif r < 0.5:
            words.append(rng.choice(topic))
        elif r < 0.65:
            k = rng.randrange(3)
            if k == 0:
                words.append(rng.choice(OLD if rng.random() < (age - 18) / 48 else YOUNG))
            elif k == 1:
                words.append(rng.choice(FEMALE if sex == "female" else MALE))
            else:
                words.append(rng.choice(POSITIVE if rng.random() < (affect - 1) / 8 else NEGATIVE))
        else:
            words.append(rng.choice(FILLER))
    text = " ".join(words)
    return text[0].upper() + text[1:] + "."


def corpus_rows(rng, n_conv, turns):
    speakers, turn_rows = [], []
    for c in range(n_conv):
        topic = TOPICS[c % len(TOPICS)]
        ids = []
        for side in "ab":
            sid = f"s{c:02d}{side}"
            age = rng.randint(19, 66)
            sex = rng.choice(["male", "female"])
            affect = rng.randint(1, 9)
            speakers.append(dict(kind="speaker", speaker_id=sid, age=age, sex=sex, overall_affect=affect))
            ids.append((sid, age, sex, affect))
        for t in range(turns):
            sid, age, sex, affect = ids[t % 2]
            turn_rows.append(dict(kind="turn", conversation_id=f"c{c:02d}", speaker_id=sid, index=t,
                                  text=utterance(rng, age, sex, affect, topic)))
    return speakers, turn_rows


def jsonl(rows):
    return "".join(json.dumps(r, separators=(",", ":"), ensure_ascii=False) + "\n" for r in rows)


def main():
    rng = random.Random(20240601)

    # 20 complete conversations, long enough for the 51..70 topic window
    speakers, turns = corpus_rows(rng, 20, 72)
    write(os.path.join(HERE, "corpus", "synthetic20.jsonl"), jsonl(speakers + turns))

    # 2 conversations, 4 speakers
    speakers, turns = corpus_rows(rng, 2, 6)
    write(os.path.join(HERE, "corpus", "two.jsonl"), jsonl(speakers + turns))

    # 10 conversations, 3 defective: missing age, affect out of range, blank transcript
    speakers, turns = corpus_rows(rng, 10, 4)
    speakers[2]["age"] = None           # c01
    speakers[9]["overall_affect"] = 11  # c04
    for t in turns:
        if t["conversation_id"] == "c07":
            t["text"] = ""
    write(os.path.join(HERE, "corpus", "ten_with_defects.jsonl"), jsonl(speakers + turns))

    # csv-dir layout with the same shape as the 2-conversation fixture
    base = os.path.join(HERE, "corpus", "csv_dir")
    speakers, turns = corpus_rows(rng, 2, 4)
    lines = ["speaker_id,age,sex,overall_affect"]
    for s in speakers:
        lines.append(f"{s['speaker_id']},{s['age']},{s['sex']},{s['overall_affect']}")
    lines[-1] = lines[-1].split(",")[0] + ",NA," + ",".join(lines[-1].split(",")[2:])
    write(os.path.join(base, "surveys.csv"), "\n".join(lines) + "\n")
    for cid in ("c00", "c01"):
        rows = ["index,speaker_id,text"]
        for t in turns:
            if t["conversation_id"] == cid:
                rows.append(f"{t['index']},{t['speaker_id']},\"{t['text']}\"")
        write(os.path.join(base, "transcripts", f"{cid}.csv"), "\n".join(rows) + "\n")


if __name__ == "__main__":
    main()
