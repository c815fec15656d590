"""SMILES tokenizer, parser, writer and one-hot encoder.

Supports the organic subset, bracket atoms (isotope, charge, explicit H,
chirality and atom class are accepted; chirality/class are discarded),
branches, ring closures (``1``-``9`` and ``%nn``), explicit bonds and
disconnected components. Directional bonds ``/`` and ``\\`` are read as
plain single bonds. Aromaticity is taken as written: no kekulization and
no aromaticity perception.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from functools import cached_property
from typing import NamedTuple

import numpy as np

# fmt: off
ELEMENTS = (
    "H", "He", "Li", "Be", "B", "C", "N", "O", "F", "Ne", "Na", "Mg", "Al", "Si", "P", "S",
    "Cl", "Ar", "K", "Ca", "Sc", "Ti", "V", "Cr", "Mn", "Fe", "Co", "Ni", "Cu", "Zn", "Ga",
    "Ge", "As", "Se", "Br", "Kr", "Rb", "Sr", "Y", "Zr", "Nb", "Mo", "Tc", "Ru", "Rh", "Pd",
    "Ag", "Cd", "In", "Sn", "Sb", "Te", "I", "Xe", "Cs", "Ba", "La", "Ce", "Pr", "Nd", "Pm",
    "Sm", "Eu", "Gd", "Tb", "Dy", "Ho", "Er", "Tm", "Yb", "Lu", "Hf", "Ta", "W", "Re", "Os",
    "Ir", "Pt", "Au", "Hg", "Tl", "Pb", "Bi", "Po", "At", "Rn", "Fr", "Ra", "Ac", "Th", "Pa",
    "U", "Np", "Pu", "Am", "Cm", "Bk", "Cf", "Es", "Fm", "Md", "No", "Lr", "Rf", "Db", "Sg",
    "Bh", "Hs", "Mt", "Ds", "Rg", "Cn", "Nh", "Fl", "Mc", "Lv", "Ts", "Og",
)
# fmt: on
ATOMIC_NUMBER = {sym: z for z, sym in enumerate(ELEMENTS, start=1)}

ORGANIC_SUBSET = ("B", "C", "N", "O", "P", "S", "F", "Cl", "Br", "I")
AROMATIC_ORGANIC = ("b", "c", "n", "o", "p", "s")
AROMATIC_BRACKET = ("b", "c", "n", "o", "p", "s", "se", "as", "te")

# Allowed valences, ascending.
VALENCES = {
    "B": (3,), "C": (4,), "N": (3, 5), "O": (2,), "P": (3, 5), "S": (2, 4, 6),
    "F": (1,), "Cl": (1,), "Br": (1,), "I": (1,),
}

BOND_CHARS = {"-": "single", "=": "double", "#": "triple", ":": "aromatic", "/": "single", "\\": "single"}
BOND_SYMBOL = {"single": "-", "double": "=", "triple": "#", "aromatic": ":"}
# Integer codes used by hashing / ranking. Aromatic is deliberately not 1.5.
BOND_CODE = {"single": 1, "double": 2, "triple": 3, "aromatic": 4}
BOND_VALENCE = {"single": 1.0, "double": 2.0, "triple": 3.0, "aromatic": 1.5}

UNKNOWN = "<unk>"
END = "<end>"
DEFAULT_VOCAB = (
    "C", "c", "N", "n", "O", "o", "S", "s", "P", "F", "Cl", "Br", "I", "B",
    "(", ")", "[", "]", "=", "#", "/", "\\", "@", "+", "-", ".",
    "1", "2", "3", "4", "5", "6", "7", "8", "9", "%", "H",
    UNKNOWN, END,
)
DEFAULT_MAX_LEN = 350


class SmilesError(ValueError):
    """Base class for every tokenizer/parser failure."""

    def __init__(self, message: str = ""):
        super().__init__(message or type(self).__name__)

    @property
    def reason(self) -> str:
        return type(self).__name__


class UnknownCharacter(SmilesError):
    def __init__(self, position: int, char: str = ""):
        self.position = position
        super().__init__(f"unknown character {char!r} at position {position}")


class UnterminatedBracket(SmilesError):
    def __init__(self, position: int):
        self.position = position
        super().__init__(f"'[' at position {position} is never closed")


class InvalidBracketAtom(SmilesError):
    def __init__(self, text: str, position: int):
        self.position = position
        super().__init__(f"cannot parse bracket atom {text!r} at position {position}")


class MalformedRingClosure(SmilesError):
    def __init__(self, position: int):
        self.position = position
        super().__init__(f"'%' at position {position} must be followed by two digits")


class UnclosedBranch(SmilesError):
    pass


class UnmatchedBranchClose(SmilesError):
    def __init__(self, position: int):
        self.position = position
        super().__init__(f"')' at position {position} has no matching '('")


class EmptyBranch(SmilesError):
    def __init__(self, position: int):
        self.position = position
        super().__init__(f"empty branch closed at position {position}")


class MisplacedToken(SmilesError):
    def __init__(self, position: int, text: str):
        self.position = position
        super().__init__(f"{text!r} at position {position} is not allowed here")


class UnmatchedRingClosure(SmilesError):
    def __init__(self, index: int):
        self.index = index
        super().__init__(f"ring closure {index} is opened but never closed")


class ConflictingRingBond(SmilesError):
    def __init__(self, index: int):
        self.index = index
        super().__init__(f"ring closure {index} specifies two different bond orders")


class SelfBond(SmilesError):
    def __init__(self, atom: int):
        self.atom = atom
        super().__init__(f"ring closure bonds atom {atom} to itself")


class DuplicateRingBond(SmilesError):
    def __init__(self, a: int, b: int):
        self.atoms = (a, b)
        super().__init__(f"atoms {a} and {b} are already bonded")


class ValenceViolation(SmilesError):
    def __init__(self, atom: int, element: str = "", total: float = 0):
        self.atom = atom
        super().__init__(f"atom {atom} ({element}) has bond order sum {total:g} beyond its allowed valence")


class NonRingAromatic(SmilesError):
    def __init__(self, atom: int):
        self.atom = atom
        super().__init__(f"aromatic atom {atom} is not in a ring")


class EmptyVocabulary(ValueError):
    pass


# ---------------------------------------------------------------------------
# Tokens
# ---------------------------------------------------------------------------


class Token(NamedTuple):
    kind: str  # atom-organic, atom-bracket, bond, branch-open, branch-close, ring-closure, dot
    text: str
    position: int


_SINGLE_KIND = {"(": "branch-open", ")": "branch-close", ".": "dot"}


def tokenize(smiles: str) -> list[Token]:
    """Split a SMILES string into tokens that exactly partition it.

    Raises:
        UnknownCharacter: a character outside the SMILES alphabet.
        UnterminatedBracket: ``[`` without a closing ``]``.
        MalformedRingClosure: ``%`` not followed by two digits.
    """
    tokens = []
    i, n = 0, len(smiles)
    while i < n:
        ch = smiles[i]
        if ch == "[":
            j = smiles.find("]", i + 1)
            if j < 0:
                raise UnterminatedBracket(i)
            tokens.append(Token("atom-bracket", smiles[i : j + 1], i))
            i = j + 1
            continue
        if ch in "CB" and smiles[i + 1 : i + 2] == ("l" if ch == "C" else "r"):
            tokens.append(Token("atom-organic", smiles[i : i + 2], i))
            i += 2
            continue
        if ch in "BCNOPSFI" or ch in "bcnops":
            tokens.append(Token("atom-organic", ch, i))
        elif ch in BOND_CHARS:
            tokens.append(Token("bond", ch, i))
        elif ch in _SINGLE_KIND:
            tokens.append(Token(_SINGLE_KIND[ch], ch, i))
        elif "0" <= ch <= "9":
            tokens.append(Token("ring-closure", ch, i))
        elif ch == "%":
            digits = smiles[i + 1 : i + 3]
            if len(digits) != 2 or not digits.isdigit() or not digits.isascii():
                raise MalformedRingClosure(i)
            tokens.append(Token("ring-closure", smiles[i : i + 3], i))
            i += 3
            continue
        else:
            raise UnknownCharacter(i, ch)
        i += 1
    return tokens


# ---------------------------------------------------------------------------
# Graph types
# ---------------------------------------------------------------------------


@dataclass
class Atom:
    element: str
    aromatic: bool = False
    formal_charge: int = 0
    explicit_h: int | None = None
    isotope: int | None = None
    index: int = 0
    implicit_h: int = 0

    @property
    def bracket(self) -> bool:
        return self.explicit_h is not None

    @property
    def atomic_number(self) -> int:
        return ATOMIC_NUMBER[self.element]

    @property
    def total_h(self) -> int:
        return self.explicit_h if self.explicit_h is not None else self.implicit_h


@dataclass(frozen=True)
class Bond:
    a: int
    b: int
    order: str  # single, double, triple, aromatic

    @property
    def endpoints(self) -> frozenset[int]:
        return frozenset((self.a, self.b))

    def other(self, atom: int) -> int:
        return self.b if atom == self.a else self.a


@dataclass
class Molecule:
    atoms: list[Atom]
    bonds: list[Bond]
    source: str = ""

    @cached_property
    def adjacency(self) -> list[list[tuple[int, str]]]:
        """Per atom, the list of ``(neighbor, bond order)`` pairs."""
        adj: list[list[tuple[int, str]]] = [[] for _ in self.atoms]
        for bond in self.bonds:
            adj[bond.a].append((bond.b, bond.order))
            adj[bond.b].append((bond.a, bond.order))
        return adj

    def degree(self, atom: int) -> int:
        return len(self.adjacency[atom])

    @cached_property
    def ring_bonds(self) -> frozenset[frozenset[int]]:
        """Bonds lying on at least one cycle (i.e. non-bridges)."""
        return frozenset(b.endpoints for b in self.bonds) - _bridges(self)

    @cached_property
    def ring_atoms(self) -> frozenset[int]:
        return frozenset(a for pair in self.ring_bonds for a in pair)

    def components(self) -> list[list[int]]:
        seen = [False] * len(self.atoms)
        out = []
        for start in range(len(self.atoms)):
            if seen[start]:
                continue
            seen[start] = True
            stack, comp = [start], []
            while stack:
                u = stack.pop()
                comp.append(u)
                for v, _ in self.adjacency[u]:
                    if not seen[v]:
                        seen[v] = True
                        stack.append(v)
            out.append(sorted(comp))
        return out

    def permuted(self, perm: list[int]) -> Molecule:
        """Relabel atoms so that old atom ``i`` becomes new atom ``perm[i]``.

        Bonds are re-listed in a new order as well; the graph is unchanged.
        """
        atoms: list[Atom] = [None] * len(self.atoms)  # type: ignore[list-item]
        for old, atom in enumerate(self.atoms):
            atoms[perm[old]] = Atom(
                atom.element, atom.aromatic, atom.formal_charge, atom.explicit_h,
                atom.isotope, perm[old], atom.implicit_h,
            )
        bonds = sorted(
            (Bond(perm[b.a], perm[b.b], b.order) for b in self.bonds),
            key=lambda b: (min(b.a, b.b), max(b.a, b.b)),
        )
        return Molecule(atoms, bonds, self.source)


def _bridges(mol: Molecule) -> set[frozenset[int]]:
    # Iterative Tarjan bridge finding.
    n = len(mol.atoms)
    disc = [-1] * n
    low = [0] * n
    bridges: set[frozenset[int]] = set()
    timer = 0
    for root in range(n):
        if disc[root] >= 0:
            continue
        disc[root] = low[root] = timer
        timer += 1
        stack = [(root, -1, iter(mol.adjacency[root]))]
        while stack:
            u, parent, it = stack[-1]
            advanced = False
            for v, _ in it:
                if v == parent:
                    continue
                if disc[v] < 0:
                    disc[v] = low[v] = timer
                    timer += 1
                    stack.append((v, u, iter(mol.adjacency[v])))
                    advanced = True
                    break
                low[u] = min(low[u], disc[v])
            if advanced:
                continue
            stack.pop()
            if stack:
                p = stack[-1][0]
                low[p] = min(low[p], low[u])
                if low[u] > disc[p]:
                    bridges.add(frozenset((p, u)))
    return bridges


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------

_BRACKET_RE = re.compile(
    r"^(?P<isotope>\d+)?"
    r"(?P<symbol>[A-Z][a-z]?|[a-z][a-z]?)"
    r"(?P<chiral>@(?:@|TH[12]|AL[12]|SP[123]|TB\d\d?|OH\d\d?)?)?"
    r"(?P<hcount>H\d?)?"
    r"(?P<charge>\+\+?|--?|[+-]\d\d?)?"
    r"(?::\d+)?$"
)


def _bracket_atom(token: Token) -> Atom:
    body = token.text[1:-1]
    m = _BRACKET_RE.match(body)
    if m is None:
        raise InvalidBracketAtom(token.text, token.position)
    symbol = m["symbol"]
    aromatic = symbol.islower()
    if aromatic:
        if symbol not in AROMATIC_BRACKET:
            raise InvalidBracketAtom(token.text, token.position)
        element = symbol.capitalize()
    else:
        element = symbol
    if element not in ATOMIC_NUMBER:
        raise InvalidBracketAtom(token.text, token.position)
    hcount = m["hcount"]
    explicit_h = 0 if hcount is None else (int(hcount[1:]) if len(hcount) > 1 else 1)
    charge_text = m["charge"]
    if not charge_text:
        charge = 0
    elif charge_text in ("++", "--"):
        charge = 2 if charge_text == "++" else -2
    else:
        magnitude = int(charge_text[1:]) if len(charge_text) > 1 else 1
        charge = magnitude if charge_text[0] == "+" else -magnitude
    isotope = int(m["isotope"]) if m["isotope"] else None
    if isotope == 0:
        raise InvalidBracketAtom(token.text, token.position)
    return Atom(element, aromatic, charge, explicit_h, isotope)


def parse(tokens: list[Token], source: str | None = None) -> Molecule:
    """Build the molecular graph from ``tokenize`` output.

    Raises a :class:`SmilesError` subclass on any syntactic or valence error.
    """
    if source is None:
        source = "".join(t.text for t in tokens)
    atoms: list[Atom] = []
    bonds: list[Bond] = []
    bonded: set[frozenset[int]] = set()
    prev: int | None = None
    pending: str | None = None
    pending_pos = -1
    branches: list[tuple[int, int]] = []  # (atom to return to, atom count at open)
    rings: dict[int, tuple[int, str | None]] = {}

    def add_bond(a: int, b: int, order: str | None) -> None:
        if order is None:
            order = "aromatic" if atoms[a].aromatic and atoms[b].aromatic else "single"
        bonds.append(Bond(a, b, order))
        bonded.add(frozenset((a, b)))

    for tok in tokens:
        kind = tok.kind
        if kind in ("atom-organic", "atom-bracket"):
            if kind == "atom-organic":
                atom = Atom(tok.text.capitalize() if tok.text.islower() else tok.text, tok.text.islower())
            else:
                atom = _bracket_atom(tok)
            atom.index = len(atoms)
            atoms.append(atom)
            if prev is not None:
                add_bond(prev, atom.index, pending)
            elif pending is not None:
                raise MisplacedToken(pending_pos, source[pending_pos])
            prev, pending = atom.index, None
        elif kind == "bond":
            if prev is None or pending is not None:
                raise MisplacedToken(tok.position, tok.text)
            pending, pending_pos = BOND_CHARS[tok.text], tok.position
        elif kind == "branch-open":
            if prev is None or pending is not None:
                raise MisplacedToken(tok.position, tok.text)
            branches.append((prev, len(atoms)))
        elif kind == "branch-close":
            if not branches:
                raise UnmatchedBranchClose(tok.position)
            if pending is not None:
                raise MisplacedToken(pending_pos, source[pending_pos])
            prev, count = branches.pop()
            if count == len(atoms):
                raise EmptyBranch(tok.position)
        elif kind == "ring-closure":
            if prev is None:
                raise MisplacedToken(tok.position, tok.text)
            num = int(tok.text.lstrip("%"))
            if num in rings:
                partner, order = rings.pop(num)
                if order is not None and pending is not None and order != pending:
                    raise ConflictingRingBond(num)
                if partner == prev:
                    raise SelfBond(prev)
                if frozenset((partner, prev)) in bonded:
                    raise DuplicateRingBond(partner, prev)
                add_bond(partner, prev, order if order is not None else pending)
            else:
                rings[num] = (prev, pending)
            pending = None
        else:  # dot
            if prev is None or pending is not None or branches:
                raise MisplacedToken(tok.position, tok.text)
            prev = None
    if pending is not None:
        raise MisplacedToken(pending_pos, source[pending_pos])
    if branches:
        raise UnclosedBranch("branch opened but never closed")
    if rings:
        raise UnmatchedRingClosure(min(rings))
    if prev is None:
        raise MisplacedToken(len(source), "")  # empty input or trailing dot

    mol = Molecule(atoms, bonds, source)
    _check_valence(mol)
    ring_atoms = mol.ring_atoms
    for atom in atoms:
        if atom.aromatic and atom.index not in ring_atoms:
            raise NonRingAromatic(atom.index)
    return mol


def _check_valence(mol: Molecule) -> None:
    """Validate valences and fill in implicit hydrogen counts.

    Aromatic bonds count 1 each toward the minimum (Kekulé) bond order sum
    used for validation. For implicit H they count 1.5, floored, and
    aromatic atoms only fill up to their lowest valence.
    """
    for atom in mol.atoms:
        allowed = VALENCES.get(atom.element)
        if allowed is None or atom.formal_charge != 0:
            continue
        n_arom = 0
        fixed = 0
        for _, order in mol.adjacency[atom.index]:
            if order == "aromatic":
                n_arom += 1
            else:
                fixed += int(BOND_VALENCE[order])
        h = atom.explicit_h or 0
        minimum = fixed + n_arom + h
        if minimum > allowed[-1]:
            raise ValenceViolation(atom.index, atom.element, minimum)
        if atom.bracket:
            continue
        total = int(fixed + 1.5 * n_arom)
        if atom.aromatic or n_arom:
            atom.implicit_h = max(0, allowed[0] - total)
        else:
            atom.implicit_h = next((v - total for v in allowed if v >= total), 0)


def parse_smiles(smiles: str) -> Molecule:
    """Tokenize and parse in one step."""
    return parse(tokenize(smiles), smiles)


class Validity(NamedTuple):
    valid: bool
    reason: str | None = None


def check_validity(smiles) -> Validity:
    """Return whether ``smiles`` parses; never raises."""
    try:
        if not isinstance(smiles, str) or not smiles:
            return Validity(False, "EmptyInput" if smiles == "" else "NotAString")
        parse_smiles(smiles)
    except SmilesError as exc:
        return Validity(False, exc.reason)
    except RecursionError:
        return Validity(False, "TooDeep")
    return Validity(True, None)


# ---------------------------------------------------------------------------
# Canonical ranks and writing
# ---------------------------------------------------------------------------


def _dense_ranks(keys: list) -> list[int]:
    order = {k: r for r, k in enumerate(sorted(set(keys)))}
    return [order[k] for k in keys]


def canonical_ranks(mol: Molecule) -> list[int]:
    """Symmetry classes by iterative neighborhood refinement.

    Atoms are seeded with ``(atomic number, charge, degree, aromatic)`` and
    repeatedly refined by their own class plus the sorted multiset of
    ``(bond code, neighbor class)``. Ranks are dense, 0-based and ordered by
    the invariant tuples, so they do not depend on input atom order.
    Symmetry-equivalent atoms share a rank.
    """
    ranks = _dense_ranks(
        [(a.atomic_number, a.formal_charge, mol.degree(a.index), a.aromatic,
          a.total_h, a.isotope or 0) for a in mol.atoms]
    )
    n_classes = len(set(ranks))
    while True:
        keys = [
            (ranks[i], tuple(sorted((BOND_CODE[o], ranks[j]) for j, o in mol.adjacency[i])))
            for i in range(len(mol.atoms))
        ]
        new = _dense_ranks(keys)
        new_classes = len(set(new))
        if new_classes == n_classes:
            return new
        ranks, n_classes = new, new_classes


def _atom_text(atom: Atom) -> str:
    symbol = atom.element.lower() if atom.aromatic else atom.element
    bracket = (
        atom.bracket
        or atom.formal_charge != 0
        or atom.isotope is not None
        or symbol not in ORGANIC_SUBSET + AROMATIC_ORGANIC
    )
    if not bracket:
        return symbol
    text = "[" + (str(atom.isotope) if atom.isotope else "") + symbol
    h = atom.total_h
    if h:
        text += "H" + (str(h) if h > 1 else "")
    if atom.formal_charge:
        sign = "+" if atom.formal_charge > 0 else "-"
        mag = abs(atom.formal_charge)
        text += sign + (str(mag) if mag > 1 else "")
    return text + "]"


def _bond_text(mol: Molecule, a: int, b: int, order: str) -> str:
    both_aromatic = mol.atoms[a].aromatic and mol.atoms[b].aromatic
    if order == "single":
        return "-" if both_aromatic else ""
    if order == "aromatic":
        return "" if both_aromatic else ":"
    return BOND_SYMBOL[order]


def _ring_label(num: int) -> str:
    return str(num) if num < 10 else f"%{num:02d}"


def write_smiles(mol: Molecule) -> str:
    """Serialize a molecule; traversal order follows :func:`canonical_ranks`."""
    atoms = mol.atoms
    if not atoms:
        return ""
    ranks = canonical_ranks(mol)
    key = lambda i: (ranks[i], i)  # noqa: E731
    visited = [False] * len(atoms)
    children: list[list[tuple[int, str]]] = [[] for _ in atoms]
    closures: list[list[tuple[int, str]]] = [[] for _ in atoms]
    starts = []
    for comp in mol.components():
        start = min(comp, key=key)
        starts.append(start)
        visited[start] = True
        stack = [(start, -1, iter(sorted(mol.adjacency[start], key=lambda e: key(e[0]))))]
        on_stack = {start}
        while stack:
            u, parent, it = stack[-1]
            for v, order in it:
                if v == parent:
                    continue
                if not visited[v]:
                    visited[v] = True
                    children[u].append((v, order))
                    stack.append((v, u, iter(sorted(mol.adjacency[v], key=lambda e: key(e[0])))))
                    on_stack.add(v)
                    break
                if v in on_stack:
                    # back edge to an ancestor: the ring opens at v, closes at u
                    closures[v].append((u, order))
                    closures[u].append((v, order))
            else:
                stack.pop()
                on_stack.discard(u)

    out: list[str] = []
    free: list[int] = []
    next_label = 1
    open_rings: dict[frozenset[int], int] = {}
    written = [False] * len(atoms)

    def emit(u: int) -> None:
        nonlocal next_label
        written[u] = True
        out.append(_atom_text(atoms[u]))
        for v, order in closures[u]:
            pair = frozenset((u, v))
            if pair in open_rings:
                num = open_rings.pop(pair)
                out.append(_ring_label(num))
                free.append(num)
                free.sort()
            else:
                if free:
                    num = free.pop(0)
                else:
                    num, next_label = next_label, next_label + 1
                open_rings[pair] = num
                out.append(_bond_text(mol, u, v, order) + _ring_label(num))
        kids = children[u]
        for i, (v, order) in enumerate(kids):
            last = i == len(kids) - 1
            if not last:
                out.append("(")
            out.append(_bond_text(mol, u, v, order))
            emit(v)
            if not last:
                out.append(")")

    for i, start in enumerate(starts):
        if i:
            out.append(".")
        emit(start)
    return "".join(out)


# ---------------------------------------------------------------------------
# One-hot encoding
# ---------------------------------------------------------------------------


def encode_symbols(smiles: str, vocab=DEFAULT_VOCAB) -> list[int]:
    """Longest-match symbolization to vocabulary column indices.

    Characters no vocabulary symbol covers map to the UNKNOWN column.
    """
    if not vocab:
        raise EmptyVocabulary("vocabulary is empty")
    index = {s: i for i, s in enumerate(vocab)}
    if UNKNOWN not in index or END not in index:
        raise EmptyVocabulary("vocabulary needs both UNKNOWN and END symbols")
    symbols = [s for s in vocab if s not in (UNKNOWN, END)]
    lengths = sorted({len(s) for s in symbols}, reverse=True)
    cols = []
    i = 0
    while i < len(smiles):
        for length in lengths:
            piece = smiles[i : i + length]
            if len(piece) == length and piece in index and piece not in (UNKNOWN, END):
                cols.append(index[piece])
                i += length
                break
        else:
            cols.append(index[UNKNOWN])
            i += 1
    return cols


def one_hot_encode(smiles: str, vocab=DEFAULT_VOCAB, max_len: int = DEFAULT_MAX_LEN) -> np.ndarray:
    """One-hot token matrix of shape ``(max_len, len(vocab))``.

    At most ``max_len - 1`` symbols are kept, followed by one END row; the
    remaining rows are zero padding.
    """
    if max_len < 1:
        raise ValueError("max_len must be >= 1")
    cols = encode_symbols(smiles, vocab)[: max_len - 1]
    cols.append(list(vocab).index(END))
    matrix = np.zeros((max_len, len(vocab)), dtype=np.float32)
    matrix[np.arange(len(cols)), cols] = 1.0
    return matrix


@dataclass
class Vocabulary:
    """An ordered symbol list with the fixed sequence length it encodes to."""

    symbols: tuple[str, ...] = DEFAULT_VOCAB
    max_len: int = DEFAULT_MAX_LEN

    def __len__(self) -> int:
        return len(self.symbols)

    def encode(self, smiles: str) -> np.ndarray:
        return one_hot_encode(smiles, self.symbols, self.max_len)
