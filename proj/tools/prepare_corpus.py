#!/usr/bin/env python3
"""Builds data/lee_sentences.txt from the Lee background news corpus.

The corpus ships with gensim as gensim/test/test_data/lee_background.cor
(300 short ABC news articles, one per line). Each article is split into
sentences and tokenized: lowercase, words kept whole, punctuation split off.
Output is one sentence per line, tokens separated by single spaces.

    python3 tools/prepare_corpus.py [path/to/lee_background.cor] > data/lee_sentences.txt

Without an argument the file is read from an installed gensim package.
"""

import re
import sys

SENTENCE_END = re.compile(r"(?<=[.!?])\s+(?=[\"'A-Z0-9])")
TOKEN = re.compile(r"\w+(?:[-'.:]\w+)*|[^\w\s]")


def corpus_path():
    if len(sys.argv) > 1:
        return sys.argv[1]
    import os
    import gensim

    return os.path.join(os.path.dirname(gensim.__file__), "test", "test_data", "lee_background.cor")


def main():
    with open(corpus_path(), encoding="utf-8") as src:
        for article in src:
            for sentence in SENTENCE_END.split(article.strip()):
                tokens = TOKEN.findall(sentence.lower())
                if tokens:
                    sys.stdout.write(" ".join(tokens) + "\n")


if __name__ == "__main__":
    main()
