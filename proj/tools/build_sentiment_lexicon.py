"""Regenerate resources/lexicons/sentiment.tsv from a VADER lexicon file.

usage: python tools/build_sentiment_lexicon.py path/to/vader_lexicon.txt > sentiment.tsv

Only alphabetic entries are kept; apostrophes are dropped to match the
tokenizer, and mean valences in [-4, 4] are rescaled to [-1, 1].
"""

import re
import sys

WORD = re.compile(r"^[a-z]+$")


def main(path):
    seen = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            fields = line.rstrip("\n").split("\t")
            if len(fields) < 2:
                continue
            word = fields[0].lower().replace("'", "")
            if not WORD.match(word) or word in seen:
                continue
            seen[word] = max(-1.0, min(1.0, float(fields[1]) / 4.0))
    print("# Derived from the VADER sentiment lexicon (vaderSentiment 3.3.2, MIT licence,")
    print("# see LICENSE.vader). Mean valence divided by 4. Regenerate with")
    print("# tools/build_sentiment_lexicon.py.")
    for word in sorted(seen):
        print(f"{word}\t{seen[word]:.4g}")


if __name__ == "__main__":
    main(sys.argv[1])
