"""Exact arithmetic for the lamplighter groups Z/mZ wr D_l and their towers.

Dihedral elements are stored as one integer: the coordinate of the element on
the {a, b}-Cayley graph of D_l, which is a cycle of length 2l (or a line when
l is infinite).  Coordinate t > 0 is the alternating word of length t starting
with ``a``; t < 0 is the word of length |t| starting with ``b``.  Even
coordinates are rotations (ab)^(t/2), odd ones are reflections, and the
product is t1 + t2 when t1 is even and t1 - t2 when t1 is odd.

Marked alphabet.  Every group here is evaluated on words over the letters
``T`` / ``t`` (base move +1 / -1), ``a`` and ``b``.  A tower level i >= 2 adds
``T1``/``t1`` ... ``T{i-1}``/``t{i-1}``: the base move of the level-j group,
sitting as a lamp value at position 0 of every level above it.
"""
from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence, Union


class Inf(enum.Enum):
    INF = "inf"

    def __repr__(self):
        return "INF"

    def __str__(self):
        return "inf"


INF = Inf.INF
Size = Union[int, Inf]

MAX_POSITION = 2**62


def parse_size(text: str) -> Size:
    text = text.strip().lower()
    if text in ("inf", "infinity", "oo", "∞"):
        return INF
    value = int(text)
    if value < 1:
        raise ValueError(f"size parameter must be >= 1 or inf, got {value}")
    return value


def format_size(value: Size) -> str:
    return "inf" if value is INF else str(value)


# ---------------------------------------------------------------------------
# dihedral groups

def dihedral_reduce(t: int, l: Size) -> int:
    return t if l is INF else t % (2 * l)


def dihedral_mul_code(t1: int, t2: int, l: Size) -> int:
    t = t1 + t2 if t1 % 2 == 0 else t1 - t2
    return t if l is INF else t % (2 * l)


def dihedral_inv_code(t: int, l: Size) -> int:
    if t % 2:
        return t
    return -t if l is INF else (-t) % (2 * l)


def dihedral_norm_code(t: int, l: Size) -> int:
    if l is INF:
        return abs(t)
    t %= 2 * l
    return min(t, 2 * l - t)


def dihedral_word(t: int, l: Size) -> str:
    """Minimal alternating word for the element at coordinate ``t``.

    At norm l (finite l) two words are minimal.  The one whose (ab)-core is
    shorter is returned, which is the ``b``-word for even l; for odd l both
    cores have equal length and the ``a``-word wins.
    """
    if l is INF:
        start, length = ("a", t) if t >= 0 else ("b", -t)
    else:
        t %= 2 * l
        if t == l:
            start = "b" if l % 2 == 0 else "a"
            length = l
        elif t < l:
            start, length = "a", t
        else:
            start, length = "b", 2 * l - t
    other = "b" if start == "a" else "a"
    return "".join(start if j % 2 == 0 else other for j in range(length))


@dataclass(frozen=True)
class DihedralElem:
    code: int
    l: Size

    def __post_init__(self):
        if self.l is not INF and not (0 <= self.code < 2 * self.l):
            object.__setattr__(self, "code", self.code % (2 * self.l))

    @classmethod
    def identity(cls, l: Size) -> "DihedralElem":
        return cls(0, l)

    @classmethod
    def a(cls, l: Size) -> "DihedralElem":
        return cls(1, l)

    @classmethod
    def b(cls, l: Size) -> "DihedralElem":
        return cls(-1, l)

    @classmethod
    def from_word(cls, word: str, l: Size) -> "DihedralElem":
        t = 0
        for ch in word:
            t = dihedral_mul_code(t, 1 if ch == "a" else -1, l)
        return cls(t, l)

    def __mul__(self, other: "DihedralElem") -> "DihedralElem":
        if self.l != other.l:
            raise ValueError("dihedral elements of different groups")
        return DihedralElem(dihedral_mul_code(self.code, other.code, self.l), self.l)

    def __pow__(self, n: int) -> "DihedralElem":
        base = self if n >= 0 else self.inverse()
        out = DihedralElem.identity(self.l)
        for _ in range(abs(n)):
            out = out * base
        return out

    def inverse(self) -> "DihedralElem":
        return DihedralElem(dihedral_inv_code(self.code, self.l), self.l)

    def norm(self) -> int:
        return dihedral_norm_code(self.code, self.l)

    def word(self) -> str:
        return dihedral_word(self.code, self.l)

    def is_identity(self) -> bool:
        return self.code == 0

    def project(self, l: Size) -> "DihedralElem":
        """Image under D_L -> D_l, defined when l divides L."""
        if self.l is not INF and (l is INF or self.l % l):
            raise ValueError(f"D_{self.l} does not map onto D_{l}")
        return DihedralElem(self.code, l)


def dihedral_mul(x: DihedralElem, y: DihedralElem, l: Size | None = None) -> DihedralElem:
    if l is not None and (x.l != l or y.l != l):
        raise ValueError("elements do not belong to D_l")
    return x * y


# ---------------------------------------------------------------------------
# specs

@dataclass(frozen=True)
class GroupSpec:
    """Parameters of Gamma_i(k, l, m); ``level`` is the tower height i."""

    level: int = 1
    k: int = 0
    l: Size = 2
    m: Size = INF

    def __post_init__(self):
        if self.level < 1:
            raise ValueError("level must be >= 1")
        if self.k < 0:
            raise ValueError("k must be >= 0")
        for name in ("l", "m"):
            value = getattr(self, name)
            if value is not INF and (not isinstance(value, int) or value < 1):
                raise ValueError(f"{name} must be a positive integer or INF")
        if self.m is not INF and not 2 * self.k < self.m:
            raise ValueError(f"need 2k < m, got k={self.k}, m={self.m}")

    # marked-group interface ------------------------------------------------
    @property
    def alphabet(self) -> tuple[str, ...]:
        extra = []
        for j in range(1, self.level):
            extra += [f"T{j}", f"t{j}"]
        return ("T", "t", "a", "b", *extra)

    def identity(self) -> "WreathElem":
        return WreathElem(0, (), self)

    def gen(self, letter: str) -> "WreathElem":
        return _generator(self, letter)

    def mul(self, x, y):
        return x * y

    def inv(self, x):
        return x.inverse()

    @property
    def is_finite(self) -> bool:
        return self.l is not INF and self.m is not INF

    def lamp_spec(self) -> "GroupSpec":
        if self.level == 1:
            raise ValueError("level-1 lamps are dihedral")
        return GroupSpec(self.level - 1, self.k, self.l, self.m)

    def with_(self, **changes) -> "GroupSpec":
        fields_ = dict(level=self.level, k=self.k, l=self.l, m=self.m)
        fields_.update(changes)
        return GroupSpec(**fields_)

    def to_text(self) -> str:
        return f"i={self.level},k={self.k},l={format_size(self.l)},m={format_size(self.m)}"

    @classmethod
    def parse(cls, text: str) -> "GroupSpec":
        values = _parse_pairs(text)
        flags = {key for key, value in values.items() if value is None}
        if flags:
            raise ValueError(f"unexpected flags {sorted(flags)} in group spec")
        return _spec_from_pairs(values)

    def __str__(self):
        prefix = "" if self.level == 1 else f"_{self.level}"
        return f"Γ{prefix}({self.k},{format_size(self.l)},{format_size(self.m)})"


_KEYS = {"i": "level", "level": "level", "k": "k", "l": "l", "m": "m"}


def _parse_pairs(text: str) -> dict:
    values: dict = {}
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if "=" not in part:
            values[part.lower()] = None
            continue
        key, value = (s.strip() for s in part.split("=", 1))
        values[key.lower()] = value
    return values


def _spec_from_pairs(values: dict) -> GroupSpec:
    kwargs = {}
    for key, value in values.items():
        if key not in _KEYS:
            raise ValueError(f"unknown key {key!r} in group spec")
        name = _KEYS[key]
        if name in ("l", "m"):
            kwargs[name] = parse_size(value)
        else:
            kwargs[name] = int(value)
    missing = {"k", "l", "m"} - kwargs.keys()
    if missing:
        raise ValueError(f"group spec missing keys {sorted(missing)}")
    return GroupSpec(**kwargs)


@dataclass(frozen=True)
class DiagonalSpec:
    """Finite truncation of a diagonal product of groups Gamma_i(k_s, l_s, m_s).

    ``tail`` marks the last factor as the stand-in for the infinite remainder
    of the product (always Gamma(0, 2, inf) in the construction).
    """

    factors: tuple[GroupSpec, ...]
    tail: bool = False

    def __post_init__(self):
        object.__setattr__(self, "factors", tuple(self.factors))
        if self.tail and not self.factors:
            raise ValueError("a tail factor needs at least one factor")
        levels = {f.level for f in self.factors}
        if len(levels) > 1:
            raise ValueError("all factors must share the tower level")
        head = self.factors[:-1] if self.tail else self.factors
        ks = [f.k for f in head]
        if any(b <= a for a, b in zip(ks, ks[1:])):
            raise ValueError(f"k_s must be strictly increasing, got {ks}")

    @property
    def level(self) -> int:
        return self.factors[0].level if self.factors else 1

    @property
    def alphabet(self) -> tuple[str, ...]:
        return GroupSpec(self.level).alphabet

    def identity(self) -> tuple:
        return tuple(f.identity() for f in self.factors)

    def gen(self, letter: str) -> tuple:
        return tuple(f.gen(letter) for f in self.factors)

    def mul(self, x, y):
        return tuple(p * q for p, q in zip(x, y))

    def inv(self, x):
        return tuple(p.inverse() for p in x)

    @property
    def head(self) -> tuple[GroupSpec, ...]:
        return self.factors[:-1] if self.tail else self.factors

    def to_text(self) -> str:
        parts = []
        for index, factor in enumerate(self.factors):
            text = factor.to_text()
            if self.tail and index == len(self.factors) - 1:
                text += ",tail"
            parts.append(text)
        return "diag: " + "; ".join(parts)

    @classmethod
    def parse(cls, text: str) -> "DiagonalSpec":
        body = text.strip()
        if body.lower().startswith("diag"):
            body = body.split(":", 1)[1] if ":" in body else ""
        chunks = [c for c in re.split(r"[;\n]", body) if c.strip() and not c.strip().startswith("#")]
        factors, tail = [], False
        for index, chunk in enumerate(chunks):
            values = _parse_pairs(chunk)
            if "tail" in values:
                if index != len(chunks) - 1:
                    raise ValueError("only the last factor can be the tail")
                tail = True
                del values["tail"]
            factors.append(_spec_from_pairs(values))
        return cls(tuple(factors), tail)

    def __str__(self):
        return " × ".join(str(f) for f in self.factors) or "{e}"


def parse_spec(text: str) -> GroupSpec | DiagonalSpec:
    """Parse either grammar; diagonal specs start with ``diag:``."""
    lines = [ln.strip() for ln in text.strip().splitlines()]
    lines = [ln for ln in lines if ln and not ln.startswith("#")]
    body = "\n".join(lines)
    if body.lower().startswith("diag"):
        return DiagonalSpec.parse(body)
    return GroupSpec.parse(body)


# ---------------------------------------------------------------------------
# wreath elements

class WreathElem:
    """Element (position, lamps) of Gamma_i(k, l, m).

    ``lamps`` is a sorted tuple of (site, value) pairs without identity values.
    Level-1 values are dihedral codes; higher levels hold WreathElem values of
    the level below.
    """

    __slots__ = ("position", "lamps", "spec", "_hash")

    def __init__(self, position: int, lamps: tuple, spec: GroupSpec):
        if spec.m is not INF:
            position %= spec.m
        elif abs(position) > MAX_POSITION:
            raise OverflowError("base position out of range")
        self.position = position
        self.lamps = lamps
        self.spec = spec
        self._hash = None

    @classmethod
    def from_lamps(cls, position: int, lamps: dict, spec: GroupSpec) -> "WreathElem":
        return cls(position, _normalize(lamps, spec), spec)

    def lamp_dict(self) -> dict:
        return dict(self.lamps)

    def lamp(self, x: int):
        """Lamp value at ``x``: a DihedralElem at level 1, else a WreathElem."""
        if self.spec.m is not INF:
            x %= self.spec.m
        for site, value in self.lamps:
            if site == x:
                return DihedralElem(value, self.spec.l) if self.spec.level == 1 else value
        if self.spec.level == 1:
            return DihedralElem.identity(self.spec.l)
        return self.spec.lamp_spec().identity()

    def is_identity(self) -> bool:
        return self.position == 0 and not self.lamps

    def __mul__(self, other: "WreathElem") -> "WreathElem":
        spec = self.spec
        if other.spec != spec:
            raise ValueError(f"cannot multiply elements of {spec} and {other.spec}")
        if not other.lamps:
            return WreathElem(self.position + other.position, self.lamps, spec)
        shift = self.position
        lamps = dict(self.lamps)
        m = spec.m
        if spec.level == 1:
            l = spec.l
            for site, value in other.lamps:
                x = site + shift
                if m is not INF:
                    x %= m
                old = lamps.get(x, 0)
                new = dihedral_mul_code(old, value, l)
                if new:
                    lamps[x] = new
                else:
                    lamps.pop(x, None)
        else:
            for site, value in other.lamps:
                x = site + shift
                if m is not INF:
                    x %= m
                old = lamps.get(x)
                new = value if old is None else old * value
                if new.is_identity():
                    lamps.pop(x, None)
                else:
                    lamps[x] = new
        return WreathElem(self.position + other.position, tuple(sorted(lamps.items())), spec)

    def inverse(self) -> "WreathElem":
        spec = self.spec
        p = self.position
        m = spec.m
        out = {}
        for site, value in self.lamps:
            x = site - p
            if m is not INF:
                x %= m
            if spec.level == 1:
                out[x] = dihedral_inv_code(value, spec.l)
            else:
                out[x] = value.inverse()
        return WreathElem(-p, tuple(sorted(out.items())), spec)

    def _key(self):
        return (self.position, self.lamps)

    def __eq__(self, other):
        if not isinstance(other, WreathElem):
            return NotImplemented
        return self.position == other.position and self.lamps == other.lamps and self.spec == other.spec

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.position, self.lamps))
        return self._hash

    def canonical(self) -> str:
        """Stable text form: position and sorted lamp entries."""
        if self.spec.level == 1:
            inner = ",".join(f"{x}:{v}" for x, v in self.lamps)
        else:
            inner = ",".join(f"{x}:[{v.canonical()}]" for x, v in self.lamps)
        return f"{self.position}|{inner}"

    def __repr__(self):
        if self.spec.level == 1:
            body = ", ".join(f"{x}: {dihedral_word(v, self.spec.l) or 'e'}" for x, v in self.lamps)
        else:
            body = ", ".join(f"{x}: {v!r}" for x, v in self.lamps)
        return f"({self.position}, {{{body}}})"

    def project(self, l: Size) -> "WreathElem":
        """Image under Gamma(k, L, m) -> Gamma(k, l, m) induced by D_L -> D_l."""
        spec = self.spec
        if spec.level != 1:
            raise ValueError("projection is implemented for level 1")
        target = spec.with_(l=l)
        DihedralElem(0, spec.l).project(l)
        lamps = {x: v for x, v in self.lamps}
        return WreathElem.from_lamps(self.position, lamps, target)


def _normalize(lamps: dict, spec: GroupSpec) -> tuple:
    out = {}
    for site, value in lamps.items():
        if spec.m is not INF:
            site %= spec.m
        if spec.level == 1:
            if isinstance(value, DihedralElem):
                value = value.code
            value = dihedral_reduce(value, spec.l)
            if value:
                out[site] = value
        elif not value.is_identity():
            out[site] = value
    return tuple(sorted(out.items()))


_GEN_CACHE: dict = {}


def _generator(spec: GroupSpec, letter: str) -> WreathElem:
    key = (spec, letter)
    cached = _GEN_CACHE.get(key)
    if cached is not None:
        return cached
    if letter == "T":
        value = WreathElem(1, (), spec)
    elif letter == "t":
        value = WreathElem(-1, (), spec)
    elif spec.level == 1:
        if letter == "a":
            value = WreathElem(0, ((0, 1),), spec)
        elif letter == "b":
            site = spec.k if spec.m is INF else spec.k % spec.m
            value = WreathElem(0, ((site, dihedral_reduce(-1, spec.l)),), spec)
        else:
            raise KeyError(f"letter {letter!r} not in the alphabet of {spec}")
    else:
        inner = _rename_down(letter, spec.level)
        lamp = spec.lamp_spec().gen(inner)
        value = WreathElem.from_lamps(0, {0: lamp}, spec)
    _GEN_CACHE[key] = value
    return value


def _rename_down(letter: str, level: int) -> str:
    if letter in ("a", "b"):
        return letter
    match = re.fullmatch(r"([Tt])(\d+)", letter)
    if not match:
        raise KeyError(f"letter {letter!r} not in the level-{level} alphabet")
    j = int(match.group(2))
    if not 1 <= j < level:
        raise KeyError(f"letter {letter!r} not in the level-{level} alphabet")
    return match.group(1) if j == level - 1 else letter


# ---------------------------------------------------------------------------
# free words

_TOKEN = re.compile(r"[Tt]\d*|[ab]|τ⁻¹|τ|α|β")
_GREEK = {"τ": "T", "τ⁻¹": "t", "α": "a", "β": "b"}
_INVERSE = {"T": "t", "t": "T", "a": "a", "b": "b"}


def letter_inverse(letter: str) -> str:
    if letter in _INVERSE:
        return _INVERSE[letter]
    return letter.swapcase()[0] + letter[1:]


@dataclass(frozen=True)
class FreeWord:
    letters: tuple[str, ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "letters", tuple(self.letters))

    @classmethod
    def parse(cls, text: str) -> "FreeWord":
        compact = re.sub(r"\s+", "", text).replace("ε", "")
        tokens = _TOKEN.findall(compact)
        if "".join(tokens) != compact:
            raise ValueError(f"cannot parse word {text!r}")
        return cls(tuple(_GREEK.get(tok, tok) for tok in tokens))

    def __len__(self):
        return len(self.letters)

    def __iter__(self) -> Iterator[str]:
        return iter(self.letters)

    def __add__(self, other: "FreeWord") -> "FreeWord":
        return FreeWord(self.letters + other.letters)

    def __mul__(self, n: int) -> "FreeWord":
        return FreeWord(self.letters * n)

    def inverse(self) -> "FreeWord":
        return FreeWord(tuple(letter_inverse(x) for x in reversed(self.letters)))

    def reduced(self) -> "FreeWord":
        stack: list[str] = []
        for x in self.letters:
            if stack and stack[-1] == letter_inverse(x):
                stack.pop()
            else:
                stack.append(x)
        return FreeWord(tuple(stack))

    @property
    def text(self) -> str:
        return "".join(self.letters)

    def __str__(self):
        return self.text or "ε"


def as_word(w) -> FreeWord:
    if isinstance(w, FreeWord):
        return w
    if isinstance(w, str):
        return FreeWord.parse(w)
    return FreeWord(tuple(w))


def evaluate(group, word) -> object:
    """Evaluate a word in any marked group (GroupSpec, DiagonalSpec, product)."""
    out = group.identity()
    for letter in as_word(word):
        out = group.mul(out, group.gen(letter))
    return out


def eval_word(w, spec: GroupSpec) -> WreathElem:
    return evaluate(spec, w)


def diagonal_eval(w, spec: DiagonalSpec) -> list[WreathElem]:
    return list(evaluate(spec, w))


def wreath_mul(g: WreathElem, h: WreathElem) -> WreathElem:
    return g * h


def wreath_inv(g: WreathElem) -> WreathElem:
    return g.inverse()


def is_identity(x) -> bool:
    if isinstance(x, WreathElem):
        return x.is_identity()
    return all(is_identity(c) for c in x)


def all_words(alphabet: Sequence[str], max_len: int) -> Iterable[FreeWord]:
    """All words up to ``max_len`` in shortlex order."""
    layer: list[tuple[str, ...]] = [()]
    for _ in range(max_len + 1):
        for letters in layer:
            yield FreeWord(letters)
        layer = [w + (x,) for w in layer for x in alphabet]
