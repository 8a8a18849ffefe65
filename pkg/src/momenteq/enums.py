import enum


class Orientation(enum.Enum):
    """Which side of the market bids: buyers (highest bid wins) or sellers in a
    procurement auction (lowest bid wins)."""

    BUYER = "buyer"
    PROCUREMENT = "procurement"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower()
        aliases = {"buyer": cls.BUYER, "buyerauction": cls.BUYER, "procurement": cls.PROCUREMENT}
        if key not in aliases:
            raise ValueError(f"unknown orientation {value!r}")
        return aliases[key]


class Family(enum.Enum):
    """Belief family. AGG pins the expected winning bid, IND the expected bid of
    a single opponent, BNE is the Bayes-Nash benchmark."""

    AGG = "agg"
    IND = "ind"
    BNE = "bne"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).strip().lower())
        except ValueError:
            raise ValueError(f"unknown family {value!r}") from None

    @property
    def code(self):
        if self is Family.BNE:
            raise ValueError("BNE has no minimax kernel")
        return 0 if self is Family.AGG else 1
