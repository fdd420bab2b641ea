"""Writes reference CLIP BPE token ids for a set of strings.

Uses open_clip's SimpleTokenizer (reference implementation) loaded from
an unpacked open_clip package directory given by --open-clip-dir.
"""
import argparse
import importlib.util
import json
import sys
from pathlib import Path

TEXTS = [
    "an emotion of enjoyment during studying",
    "neutrality during studying",
    "Relaxed mouth, open eyes, neutral eyebrows, no noticeable emotional changes, engaged with study materials, or natural body posture.",
    "Upturned mouth corners, sparkling eyes, relaxed eyebrows, focused on course content, or occasionally nodding in agreement.",
    "Furrowed eyebrows, slightly open mouth, wandering or puzzled gaze, chin rests on the palm, or eyes lock on learning material.",
    "Mouth opens in a yawn, eyelids droop, head tilts forward, eyes lock on learning material, or hand writing.",
    "Shifting eyes, restless or fidgety posture, relaxed but unfocused expression, frequently checking phone, or averted gaze from study materials.",
    "Widened eyes, an open mouth, raised eyebrows, and a frozen expression. Sudden stillness, widened eyes on the other person, hands raised or paused mid-motion.",
    "Tears, a downward-turned mouth, drooping upper eyelids, and a wrinkled forehead.",
    "It's 3:45pm -- we're   testing    WHITESPACE & punctuation!!! (v2.0) don't won't y'all",
    "a photo of a cat",
]


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--open-clip-dir", required=True, help="directory containing tokenizer.py")
    ap.add_argument("--out", required=True)
    args = ap.parse_args()

    src = Path(args.open_clip_dir) / "tokenizer.py"
    spec = importlib.util.spec_from_file_location("oc_tokenizer", src)
    mod = importlib.util.module_from_spec(spec)
    sys.modules["oc_tokenizer"] = mod
    spec.loader.exec_module(mod)
    tok = mod.SimpleTokenizer(str(Path(args.open_clip_dir) / "bpe_simple_vocab_16e6.txt.gz"))

    cases = [{"text": t, "ids": tok.encode(t)} for t in TEXTS]
    out = {"sot": tok.sot_token_id, "eot": tok.eot_token_id, "vocab_size": tok.vocab_size, "cases": cases}
    Path(args.out).write_text(json.dumps(out, indent=1) + "\n")


if __name__ == "__main__":
    main()
