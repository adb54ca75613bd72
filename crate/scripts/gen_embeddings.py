#!/usr/bin/env python3
"""Generate the bundled word-vector file.

Each token is a sparse mix of hand-assigned semantic features plus a small
deterministic jitter derived from the token's SHA-256, so the file is
reproducible byte for byte.
"""
import hashlib
import random
import sys

FEATURES = [
    "sad", "joy", "breath", "tears", "laughter", "face", "head", "gaze",
    "hand", "throat", "low", "mid", "high", "anxiety", "anger", "generic",
]
IDX = {f: i for i, f in enumerate(FEATURES)}

# Intensity adverbs carry no baseline "mid" lean; everything else does, so
# unrelated trailing words rank as moderate.
INTENSITY = {
    "softly": {"low": 1.0},
    "slightly": {"low": 0.9},
    "quietly": {"low": 0.9, "throat": 0.15},
    "gently": {"low": 0.9},
    "faintly": {"low": 0.85},
    "lightly": {"low": 0.85},
    "barely": {"low": 0.8},
    "slowly": {"low": 0.5, "mid": 0.3},
    "moderately": {"mid": 1.0},
    "somewhat": {"mid": 0.85},
    "fairly": {"mid": 0.8},
    "visibly": {"mid": 0.6, "high": 0.3},
    "heavily": {"high": 1.0},
    "deeply": {"high": 0.85, "sad": 0.2, "breath": 0.15},
    "loudly": {"high": 0.9, "throat": 0.3},
    "intensely": {"high": 0.95},
    "uncontrollably": {"high": 1.0, "anxiety": 0.2},
    "hard": {"high": 0.7},
    "violently": {"high": 0.9, "anger": 0.3},
    "bitterly": {"high": 0.7, "sad": 0.4},
}

WORDS = {
    # crying
    "cries": {"sad": 0.8, "tears": 1.0, "throat": 0.3},
    "cry": {"sad": 0.8, "tears": 1.0, "throat": 0.3},
    "crying": {"sad": 0.8, "tears": 0.95, "throat": 0.3},
    "cried": {"sad": 0.8, "tears": 0.9, "throat": 0.25},
    "sobs": {"sad": 0.9, "tears": 0.9, "breath": 0.3, "throat": 0.3},
    "sob": {"sad": 0.9, "tears": 0.9, "breath": 0.3, "throat": 0.3},
    "sobbing": {"sad": 0.9, "tears": 0.85, "breath": 0.3, "throat": 0.3},
    "weeps": {"sad": 0.8, "tears": 0.9},
    "tears": {"sad": 0.6, "tears": 1.0},
    "sniffles": {"sad": 0.5, "tears": 0.6, "breath": 0.4},
    "sniffs": {"sad": 0.3, "tears": 0.4, "breath": 0.5},
    "wails": {"sad": 0.8, "tears": 0.7, "throat": 0.6, "high": 0.3},
    "bursts": {"tears": 0.3, "generic": 0.3, "high": 0.4},
    "chokes": {"throat": 0.7, "tears": 0.4, "anxiety": 0.3},
    # laughter
    "laughs": {"joy": 0.9, "laughter": 1.0, "throat": 0.3},
    "laugh": {"joy": 0.9, "laughter": 1.0, "throat": 0.3},
    "laughing": {"joy": 0.9, "laughter": 0.95, "throat": 0.3},
    "chuckles": {"joy": 0.7, "laughter": 0.8, "throat": 0.2},
    "giggles": {"joy": 0.8, "laughter": 0.8},
    # smiling
    "smiles": {"joy": 0.8, "face": 1.0},
    "smile": {"joy": 0.8, "face": 1.0},
    "smiling": {"joy": 0.8, "face": 0.95},
    "grins": {"joy": 0.8, "face": 0.9},
    "beams": {"joy": 0.9, "face": 0.7},
    # breathing
    "sighs": {"breath": 1.0, "sad": 0.5},
    "sigh": {"breath": 1.0, "sad": 0.5},
    "sighing": {"breath": 0.95, "sad": 0.5},
    "exhales": {"breath": 0.9, "sad": 0.2},
    "inhales": {"breath": 0.9},
    "breathes": {"breath": 0.8},
    "gasps": {"breath": 0.7, "anxiety": 0.5},
    "groans": {"breath": 0.5, "throat": 0.5, "sad": 0.4, "anger": 0.3},
    "moans": {"breath": 0.5, "throat": 0.5, "sad": 0.5},
    # voice and throat
    "whispers": {"throat": 0.8, "low": 0.4},
    "mutters": {"throat": 0.7, "anger": 0.2},
    "clears": {"throat": 0.8},
    "throat": {"throat": 1.0},
    "coughs": {"throat": 0.8, "breath": 0.3},
    "swallows": {"throat": 0.7, "anxiety": 0.3},
    "voice": {"throat": 0.9},
    "cracks": {"throat": 0.5, "sad": 0.4},
    # head gestures
    "nods": {"head": 1.0, "joy": 0.1},
    "nod": {"head": 1.0, "joy": 0.1},
    "shakes": {"head": 0.8, "anxiety": 0.2},
    "head": {"head": 1.0},
    "bangs": {"head": 0.5, "hand": 0.4, "anger": 0.7, "high": 0.3},
    "tilts": {"head": 0.8},
    "bows": {"head": 0.8, "sad": 0.2},
    # gaze
    "looks": {"gaze": 1.0},
    "look": {"gaze": 1.0},
    "down": {"gaze": 0.4, "sad": 0.5, "breath": 0.3},
    "away": {"gaze": 0.5, "anxiety": 0.3},
    "stares": {"gaze": 0.9},
    "glances": {"gaze": 0.8, "low": 0.2},
    "eyes": {"gaze": 0.8, "face": 0.3},
    "closes": {"gaze": 0.4, "face": 0.3},
    # face
    "frowns": {"face": 0.7, "sad": 0.5, "anger": 0.3},
    "winces": {"face": 0.7, "anxiety": 0.4},
    "bites": {"face": 0.6, "anxiety": 0.6},
    "lip": {"face": 0.7},
    "lips": {"face": 0.7},
    "blushes": {"face": 0.7, "joy": 0.3, "anxiety": 0.3},
    # hands and body
    "hands": {"hand": 1.0},
    "hand": {"hand": 1.0},
    "flags": {"hand": 0.7, "anxiety": 0.2},
    "waves": {"hand": 0.8, "joy": 0.3},
    "shrugs": {"hand": 0.7, "generic": 0.2},
    "fidgets": {"hand": 0.6, "anxiety": 0.7},
    "clenches": {"hand": 0.6, "anger": 0.6},
    "trembles": {"anxiety": 0.8, "hand": 0.4},
    "shivers": {"anxiety": 0.6, "hand": 0.3},
    "struggles": {"anxiety": 0.6, "sad": 0.4, "hand": 0.3},
    "rubs": {"hand": 0.7},
    "leans": {"hand": 0.4, "generic": 0.3},
    "pauses": {"generic": 0.5, "breath": 0.3},
    "hesitates": {"anxiety": 0.6, "generic": 0.3},
    # affect words
    "sad": {"sad": 1.0},
    "sadly": {"sad": 0.9},
    "happy": {"joy": 1.0},
    "happily": {"joy": 0.9},
    "angry": {"anger": 1.0},
    "angrily": {"anger": 0.8, "high": 0.4},
    "nervous": {"anxiety": 1.0},
    "nervously": {"anxiety": 0.9},
    "anxious": {"anxiety": 1.0},
    "anxiously": {"anxiety": 0.9},
    "tearfully": {"tears": 0.8, "sad": 0.6},
    "sorrow": {"sad": 0.9, "tears": 0.3},
    "grief": {"sad": 0.95, "tears": 0.4},
    "despair": {"sad": 0.9, "anxiety": 0.3},
    # function words
    "with": {"generic": 0.5},
    "his": {"generic": 0.5},
    "her": {"generic": 0.5},
    "into": {"generic": 0.5},
    "a": {"generic": 0.5},
    "the": {"generic": 0.5},
    "at": {"generic": 0.5},
    "of": {"generic": 0.5},
    "up": {"generic": 0.4, "gaze": 0.2},
    "in": {"generic": 0.5},
}

JITTER = 0.03
BASE_MID = 0.15


def vector(token, feats):
    v = [0.0] * len(FEATURES)
    for k, x in feats.items():
        v[IDX[k]] = x
    seed = int.from_bytes(hashlib.sha256(token.encode()).digest()[:8], "little")
    rng = random.Random(seed)
    return [x + rng.uniform(-JITTER, JITTER) for x in v]


def main(out):
    rows = []
    for tok, feats in sorted(INTENSITY.items()):
        rows.append((tok, vector(tok, feats)))
    for tok, feats in sorted(WORDS.items()):
        if feats is None:
            continue
        f = dict(feats)
        f["mid"] = f.get("mid", 0.0) + BASE_MID
        rows.append((tok, vector(tok, f)))
    rows.sort(key=lambda r: r[0])
    with open(out, "w", encoding="utf-8") as fh:
        fh.write(f"{len(rows)} {len(FEATURES)}\n")
        for tok, v in rows:
            fh.write(tok + " " + " ".join(f"{x:.6f}" for x in v) + "\n")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "crates/core/assets/embeddings.txt")
