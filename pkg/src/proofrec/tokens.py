"""Normative special-token spellings shared by the featurizer and tokenizer.

These strings appear verbatim in model vocabularies and persisted artifacts,
so they must never change spelling or relative id order.
"""

PAD = "<PAD>"
UNK = "<UNK>"
MASK = "<MASK>"
CMD1 = "CMD1"
ANT = "<ANT>"
CONS = "<CONS>"
HID = "<HID>"
SEP = "<SEP>"
NOCMD = "<NOCMD>"
TRM = "<TRM>"
TYP = "<TYP>"

# Reserved vocabulary slots, in id order. PAD is deliberately id 0.
SPECIAL_TOKENS = (PAD, UNK, MASK, CMD1, ANT, CONS, HID, SEP, NOCMD, TRM, TYP)

SPECIAL_SET = frozenset(SPECIAL_TOKENS)

PAD_ID = SPECIAL_TOKENS.index(PAD)
UNK_ID = SPECIAL_TOKENS.index(UNK)
MASK_ID = SPECIAL_TOKENS.index(MASK)
