"""Toy mixture generators, embedding/lexicon loaders, and dataset splitting.

File formats are parsed byte-exactly: UTF-8, ASCII-whitespace tokens, no
locale-dependent behavior. Loader round trips reproduce vectors exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ContractViolation, ParseError
from .validation import as_matrix, check_count, check_positive

CIRCLE_SIGMA_DEFAULT = 0.05
CUBE_SIGMA_DEFAULT = 0.1


# ---- toy mixtures ---------------------------------------------------------------


@dataclass(frozen=True)
class MixtureSpec:
    """Isotropic Gaussian mixture with uniform component weights."""

    means: np.ndarray
    sigma: float

    def __post_init__(self):
        object.__setattr__(self, "means", as_matrix(self.means, name="means"))
        check_positive(self.sigma, "sigma")
        if self.means.shape[0] < 1:
            raise ContractViolation("mixture needs at least one component")

    @property
    def dim(self) -> int:
        return self.means.shape[1]

    @property
    def n_components(self) -> int:
        return self.means.shape[0]

    def sample_labeled(self, count: int, seed: int) -> tuple[np.ndarray, np.ndarray]:
        count = check_count(count, "count")
        rng = np.random.default_rng(seed)
        labels = rng.integers(0, self.n_components, size=count)
        points = self.means[labels] + self.sigma * rng.standard_normal((count, self.dim))
        return points, labels

    def sample(self, count: int, seed: int) -> np.ndarray:
        return self.sample_labeled(count, seed)[0]


def circle_mixture_spec(k: int, sigma: float = CIRCLE_SIGMA_DEFAULT) -> MixtureSpec:
    """k components spread uniformly around the unit circle."""
    k = check_count(k, "k")
    angles = 2.0 * np.pi * np.arange(k) / k
    means = np.column_stack([np.cos(angles), np.sin(angles)])
    return MixtureSpec(means, sigma)


def cube_mixture_spec(sigma: float = CUBE_SIGMA_DEFAULT) -> MixtureSpec:
    """8 components at the vertices of the cube {-1, +1}^3."""
    corners = np.array([[x, y, z] for x in (-1.0, 1.0)
                        for y in (-1.0, 1.0) for z in (-1.0, 1.0)])
    return MixtureSpec(corners, sigma)


class MixtureSampler:
    """Sampler interface over a MixtureSpec (fresh i.i.d. draws per batch)."""

    def __init__(self, spec: MixtureSpec, seed: int):
        self.spec = spec
        self.dim = spec.dim
        self._rng = np.random.default_rng(seed)

    def sample(self, size: int) -> np.ndarray:
        size = check_count(size, "size")
        labels = self._rng.integers(0, self.spec.n_components, size=size)
        noise = self._rng.standard_normal((size, self.dim))
        return self.spec.means[labels] + self.spec.sigma * noise


def gen_circle_mixture(k: int, n: int, sigma: float = CIRCLE_SIGMA_DEFAULT,
                       seed: int = 0) -> np.ndarray:
    return circle_mixture_spec(k, sigma).sample(n, seed)


def gen_cube_mixture(n: int, sigma: float = CUBE_SIGMA_DEFAULT,
                     seed: int = 0) -> np.ndarray:
    return cube_mixture_spec(sigma).sample(n, seed)


# ---- embeddings -----------------------------------------------------------------


@dataclass
class EmbeddingSet:
    """Ordered vocabulary with one vector per word."""

    words: list
    vectors: np.ndarray
    normalized: bool = False
    n_duplicates: int = 0
    n_dropped: int = 0
    _index: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        self.vectors = as_matrix(self.vectors, name="vectors")
        if len(self.words) != self.vectors.shape[0]:
            raise ContractViolation("vocabulary size must equal the vector count")
        self._index = {}
        for i, w in enumerate(self.words):
            if w in self._index:
                raise ContractViolation(f"duplicate word {w!r} in vocabulary")
            self._index[w] = i
        if self.normalized and self.vectors.size:
            norms = np.linalg.norm(self.vectors, axis=1)
            if np.max(np.abs(norms - 1.0)) > 1e-6:
                raise ContractViolation("normalized flag set but rows are not unit norm")

    def __len__(self) -> int:
        return len(self.words)

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    def index_of(self, word: str):
        return self._index.get(word)

    def take(self, indices) -> "EmbeddingSet":
        idx = np.asarray(indices, dtype=int)
        return EmbeddingSet([self.words[i] for i in idx], self.vectors[idx],
                            normalized=self.normalized)


def _parse_vector_line(parts, dim, line_no):
    if dim is not None and len(parts) - 1 != dim:
        raise ParseError(
            f"line {line_no}: expected {dim} values, got {len(parts) - 1}",
            line_no=line_no,
        )
    try:
        return parts[0], np.array([float(v) for v in parts[1:]], dtype=np.float64)
    except ValueError as exc:
        raise ParseError(f"line {line_no}: {exc}", line_no=line_no) from exc


def load_embeddings(path, format: str = "glove-text", limit: int | None = None,
                    normalize: bool = False) -> EmbeddingSet:
    """Read a text embedding file.

    "glove-text" lines are "word v1 ... vd". "fasttext-vec" has a leading
    "count dim" header and the same body; the body length must match the
    header unless a smaller limit cuts reading short. Duplicate words keep
    their first occurrence; zero-norm rows are dropped when normalizing.
    Both counters are reported on the returned set.
    """
    if format not in ("glove-text", "fasttext-vec"):
        raise ContractViolation(f"unknown embedding format {format!r}")
    if limit is not None:
        limit = check_count(limit, "limit")

    words: list[str] = []
    rows: list[np.ndarray] = []
    seen: set[str] = set()
    n_duplicates = 0
    n_dropped = 0
    dim = None
    declared_count = None

    with open(path, "r", encoding="utf-8") as fh:
        line_no = 0
        body_lines = 0
        truncated = False
        if format == "fasttext-vec":
            header = fh.readline()
            line_no += 1
            parts = header.split()
            if len(parts) != 2:
                raise ParseError(f"line 1: malformed header {header!r}", line_no=1)
            try:
                declared_count, dim = int(parts[0]), int(parts[1])
            except ValueError as exc:
                raise ParseError(f"line 1: {exc}", line_no=1) from exc
        for raw in fh:
            line_no += 1
            parts = raw.split()
            if not parts:
                continue
            if limit is not None and body_lines >= limit:
                truncated = True
                break
            body_lines += 1
            word, vec = _parse_vector_line(parts, dim, line_no)
            if dim is None:
                dim = vec.size
            if word in seen:
                n_duplicates += 1
                continue
            if normalize:
                norm = float(np.linalg.norm(vec))
                if norm == 0.0:
                    n_dropped += 1
                    continue
                vec = vec / norm
            seen.add(word)
            words.append(word)
            rows.append(vec)
        if format == "fasttext-vec" and not truncated and body_lines != declared_count:
            raise ParseError(
                f"header declares {declared_count} rows but body has {body_lines}",
                line_no=line_no,
            )

    if not rows:
        raise ParseError("no embedding rows parsed", line_no=0)
    return EmbeddingSet(words, np.vstack(rows), normalized=normalize,
                        n_duplicates=n_duplicates, n_dropped=n_dropped)


def save_embeddings(emb: EmbeddingSet, path, format: str = "glove-text") -> None:
    """Write an embedding set back to text with full float precision."""
    if format not in ("glove-text", "fasttext-vec"):
        raise ContractViolation(f"unknown embedding format {format!r}")
    with open(path, "w", encoding="utf-8") as fh:
        if format == "fasttext-vec":
            fh.write(f"{len(emb)} {emb.dim}\n")
        for word, row in zip(emb.words, emb.vectors):
            fh.write(word + " " + " ".join(repr(float(v)) for v in row) + "\n")


@dataclass
class Lexicon:
    """Query-to-valid-target index pairs resolved against two embedding sets."""

    entries: list  # (source index, frozenset of target indices)
    n_oov: int = 0

    def __post_init__(self):
        if not self.entries:
            raise ContractViolation("resolved lexicon is empty")

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def restrict_queries(self, keep) -> "Lexicon":
        """Keep entries whose query index is in `keep`, remapping via it.

        `keep` maps original source indices to new ones (dict) or is an
        iterable of original indices kept in order.
        """
        if not isinstance(keep, dict):
            keep = {int(orig): new for new, orig in enumerate(keep)}
        kept = [(keep[q], targets) for q, targets in self.entries if q in keep]
        return Lexicon(kept, n_oov=self.n_oov)


def identity_lexicon(count: int) -> Lexicon:
    """Each index translates to itself; used by self- and synthetic alignment."""
    count = check_count(count, "count")
    return Lexicon([(i, frozenset((i,))) for i in range(count)])


def load_lexicon(path, src: EmbeddingSet, tgt: EmbeddingSet) -> Lexicon:
    """Resolve "src_word tgt_word" lines to index pairs.

    Out-of-vocabulary pairs are dropped and counted; several targets for one
    source aggregate into a single valid set.
    """
    by_query: dict[int, set] = {}
    n_oov = 0
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            parts = raw.split()
            if not parts:
                continue
            if len(parts) != 2:
                raise ParseError(
                    f"line {line_no}: expected 'src_word tgt_word'", line_no=line_no)
            si = src.index_of(parts[0])
            ti = tgt.index_of(parts[1])
            if si is None or ti is None:
                n_oov += 1
                continue
            by_query.setdefault(si, set()).add(ti)
    entries = [(q, frozenset(t)) for q, t in sorted(by_query.items())]
    if not entries:
        raise ContractViolation("lexicon resolved to zero usable pairs")
    return Lexicon(entries, n_oov=n_oov)


# ---- splitting ------------------------------------------------------------------


def split_indices(count: int, fraction: float, seed: int) -> tuple[np.ndarray, np.ndarray]:
    count = check_count(count, "count")
    if not 0.0 < fraction < 1.0:
        raise ContractViolation(f"fraction must be in (0, 1), got {fraction!r}")
    n_train = int(count * fraction)
    if n_train < 1 or n_train >= count:
        raise ContractViolation(
            f"split of {count} items at {fraction} leaves an empty part")
    perm = np.random.default_rng(seed).permutation(count)
    return perm[:n_train], perm[n_train:]


def split(data, fraction: float, seed: int):
    """Deterministic shuffled split of points or an EmbeddingSet.

    The parts are disjoint and their union is the input.
    """
    if isinstance(data, EmbeddingSet):
        tr, te = split_indices(len(data), fraction, seed)
        return data.take(tr), data.take(te)
    A = as_matrix(data, name="data")
    tr, te = split_indices(A.shape[0], fraction, seed)
    return A[tr], A[te]
