"""Conditional k-DPPs: completing a fixed partial selection.

Conditioning a DPP on containing the index set A restricts it to the
complement of A with the kernel

    L^A = (((L + I_comp)^{-1})_comp)^{-1} - I,

where I_comp is the identity with zeros on the diagonal entries of A. With
one item left to choose (the 5-plus-1 annotation setup) the conditional
probability of candidate b reduces to a ratio of diagonal entries of L^A;
general completions divide det(L^A_B) by the matching elementary symmetric
polynomial.

The annotation model couples one feature kernel per subcategory through
shared block scales: every sample contributes the log conditional
probability of the annotator's chosen item given the five fixed ones.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .kernels import DiscreteKernel, log_elementary_symmetric
from .likelihood import DEFAULT_PRIOR, InvalidParameters, _vec
from .linalg import chol_logdet

__all__ = [
    "conditional_kernel",
    "conditional_single_item_probs",
    "conditional_log_prob",
    "Annotation",
    "ConditionalKdppModel",
    "PooledKdppModel",
    "conditional_kdpp_log_likelihood",
]


def _complement(n, indices):
    mask = np.ones(n, dtype=bool)
    mask[indices] = False
    return np.nonzero(mask)[0]


def _check_subset(n, indices):
    idx = np.asarray(indices, dtype=int).ravel()
    if idx.size and (idx.min() < 0 or idx.max() >= n):
        raise ValueError("conditioning indices outside the ground set")
    if np.unique(idx).size != idx.size:
        raise ValueError("conditioning indices repeat an item")
    if idx.size >= n:
        raise ValueError("conditioning on the full ground set leaves no "
                         "candidates")
    return idx


def conditional_kernel(kernel, indices):
    """Kernel of the DPP conditioned on containing the given items.

    Returns (matrix, complement) where matrix is the conditional kernel
    over the complement indices, in complement order. Conditioning on the
    empty set returns the original kernel.
    """
    L = kernel.matrix if isinstance(kernel, DiscreteKernel) else np.asarray(kernel, float)
    n = L.shape[0]
    idx = _check_subset(n, indices)
    comp = _complement(n, idx)
    if idx.size == 0:
        return L.copy(), comp
    masked = L.copy()
    masked[comp, comp] += 1.0
    try:
        inv = np.linalg.inv(masked)
    except np.linalg.LinAlgError:
        raise ValueError(
            "L + I_complement is singular (condition estimate %.3e); the "
            "conditioning set may have probability zero" % np.linalg.cond(masked)
        ) from None
    block = inv[np.ix_(comp, comp)]
    try:
        cond = np.linalg.inv(block)
    except np.linalg.LinAlgError:
        raise ValueError(
            "the restricted inverse is singular (condition estimate %.3e)"
            % np.linalg.cond(block)
        ) from None
    cond = 0.5 * (cond + cond.T)
    cond[np.diag_indices_from(cond)] -= 1.0
    return cond, comp


def conditional_single_item_probs(kernel, indices):
    """P(next item = b | selection contains `indices`) for every candidate.

    Returns (probs, complement): the single-item conditional k-DPP with
    k = len(indices) + 1 puts mass proportional to the diagonal of the
    conditional kernel on each remaining item.
    """
    cond, comp = conditional_kernel(kernel, indices)
    diag = np.maximum(np.diag(cond).copy(), 0.0)
    total = float(diag.sum())
    if total <= 0.0:
        raise ValueError("conditional kernel has no diagonal mass; every "
                         "completion has probability zero")
    return diag / total, comp


def conditional_log_prob(kernel, indices, completion):
    """log P(completion B | selection contains A) under a (|A|+|B|)-DPP.

    Uses det(L^A_B) / e_{|B|}(spectrum of L^A). The single-item case
    matches conditional_single_item_probs.
    """
    L = kernel.matrix if isinstance(kernel, DiscreteKernel) else np.asarray(kernel, float)
    completion = np.asarray(completion, dtype=int).ravel()
    if completion.size == 0:
        raise ValueError("completion must be non-empty")
    cond, comp = conditional_kernel(L, indices)
    positions = []
    lookup = {int(i): p for p, i in enumerate(comp)}
    for b in completion:
        if int(b) not in lookup:
            raise ValueError("completion item %d is conditioned on or out of "
                             "range" % int(b))
        positions.append(lookup[int(b)])
    if len(set(positions)) != len(positions):
        raise ValueError("completion repeats an item")
    sub = cond[np.ix_(positions, positions)]
    lams = np.maximum(np.linalg.eigvalsh(cond), 0.0)
    log_ek = log_elementary_symmetric(lams, completion.size)
    if log_ek == -np.inf:
        raise ValueError("no completion of this size has positive probability")
    return chol_logdet(sub) - log_ek


@dataclass(frozen=True)
class Annotation:
    """One annotation sample: within `subcategory`, item `choice` was added
    to the fixed partial selection `partial`."""

    subcategory: str
    partial: tuple
    choice: int

    def __post_init__(self):
        partial = tuple(int(i) for i in self.partial)
        object.__setattr__(self, "partial", partial)
        object.__setattr__(self, "choice", int(self.choice))
        if self.choice in partial:
            raise ValueError("chosen item %d is already in the partial set"
                             % self.choice)
        if len(set(partial)) != len(partial):
            raise ValueError("partial set repeats an item")


def _as_annotation(sample):
    if isinstance(sample, Annotation):
        return sample
    cat, partial, choice = sample
    return Annotation(str(cat), tuple(partial), int(choice))


class ConditionalKdppModel:
    """Shared-parameter conditional k-DPP over per-subcategory feature kernels.

    families maps subcategory names to kernel families with identical
    param_names (one positive scale per feature block). Each annotation
    contributes log P(choice | partial) under the subcategory's kernel;
    subcategories are independent given the shared scales.
    """

    def __init__(self, families, k=6, priors=None):
        if not families:
            raise ValueError("need at least one subcategory family")
        self.families = dict(families)
        names = None
        for cat, family in self.families.items():
            if names is None:
                names = tuple(family.param_names)
            elif tuple(family.param_names) != names:
                raise ValueError("subcategory %r disagrees on parameter names"
                                 % cat)
        self.param_names = names
        self.k = int(k)
        if self.k < 2:
            raise ValueError("k must be >= 2 (a partial set plus one choice)")
        self.discrete = True
        priors = dict(priors or {})
        unknown = set(priors) - set(names)
        if unknown:
            raise ValueError("priors for unknown parameters: %s" % sorted(unknown))
        self.priors = {name: priors.get(name, DEFAULT_PRIOR) for name in names}

    def log_prior(self, theta_vec):
        v = _vec(theta_vec, len(self.param_names))
        total = 0.0
        for name, x in zip(self.param_names, v):
            total += self.priors[name].log_density(float(x))
            if total == -np.inf:
                return -np.inf
        return total

    def _check(self, samples):
        out = []
        for t, raw in enumerate(samples):
            ann = _as_annotation(raw)
            if ann.subcategory not in self.families:
                raise ValueError("sample %d names unknown subcategory %r"
                                 % (t, ann.subcategory))
            if len(ann.partial) != self.k - 1:
                raise ValueError("sample %d fixes %d items but k=%d needs %d"
                                 % (t, len(ann.partial), self.k, self.k - 1))
            n = self.families[ann.subcategory].ground.n
            if ann.choice < 0 or ann.choice >= n:
                raise ValueError("sample %d chooses item %d outside the "
                                 "subcategory" % (t, ann.choice))
            out.append(ann)
        return out

    def log_likelihood(self, theta_vec, samples):
        anns = self._check(samples)
        by_cat = {}
        for ann in anns:
            by_cat.setdefault(ann.subcategory, []).append(ann)
        total = 0.0
        for cat, group in by_cat.items():
            try:
                L = self.families[cat].build(theta_vec)
            except InvalidParameters:
                return -np.inf
            for ann in group:
                probs, comp = conditional_single_item_probs(L, ann.partial)
                pos = int(np.searchsorted(comp, ann.choice))
                p = probs[pos]
                if p <= 0.0:
                    warnings.warn("chosen item %d has zero conditional "
                                  "probability" % ann.choice)
                    return -np.inf
                total += float(np.log(p))
        return total

    def log_posterior(self, theta_vec, samples):
        lp = self.log_prior(theta_vec)
        if lp == -np.inf:
            return -np.inf
        ll = self.log_likelihood(theta_vec, samples)
        return lp + ll if ll != -np.inf else -np.inf


class PooledKdppModel:
    """Shared-parameter plain k-DPP over per-subcategory feature kernels.

    Ignores the partial/choice split: each sample is a full k-subset
    (subcategory, item indices) drawn from that subcategory's kernel.
    Serves as the baseline the conditional model is compared against.
    """

    def __init__(self, families, k=6, priors=None):
        helper = ConditionalKdppModel(families, k=max(int(k), 2), priors=priors)
        self.families = helper.families
        self.param_names = helper.param_names
        self.priors = helper.priors
        self.k = int(k)
        if self.k < 1:
            raise ValueError("k must be >= 1")
        self.discrete = True

    def log_prior(self, theta_vec):
        v = _vec(theta_vec, len(self.param_names))
        total = 0.0
        for name, x in zip(self.param_names, v):
            total += self.priors[name].log_density(float(x))
            if total == -np.inf:
                return -np.inf
        return total

    def _check(self, samples):
        out = []
        for t, raw in enumerate(samples):
            cat, items = raw
            cat = str(cat)
            if cat not in self.families:
                raise ValueError("sample %d names unknown subcategory %r"
                                 % (t, cat))
            items = tuple(int(i) for i in items)
            if len(items) != self.k:
                raise ValueError("sample %d has %d items but k=%d"
                                 % (t, len(items), self.k))
            _check_subset(self.families[cat].ground.n, items)
            out.append((cat, np.asarray(items, dtype=int)))
        return out

    def log_likelihood(self, theta_vec, samples):
        pairs = self._check(samples)
        by_cat = {}
        for cat, items in pairs:
            by_cat.setdefault(cat, []).append(items)
        total = 0.0
        for cat, groups in by_cat.items():
            try:
                L = self.families[cat].build(theta_vec)
            except InvalidParameters:
                return -np.inf
            lam = np.clip(np.linalg.eigvalsh(L), 0.0, None)
            log_z = log_elementary_symmetric(lam, self.k)
            if log_z == -np.inf:
                return -np.inf
            for items in groups:
                total += chol_logdet(L[np.ix_(items, items)]) - log_z
        return total

    def log_posterior(self, theta_vec, samples):
        lp = self.log_prior(theta_vec)
        if lp == -np.inf:
            return -np.inf
        ll = self.log_likelihood(theta_vec, samples)
        return lp + ll if ll != -np.inf else -np.inf


def conditional_kdpp_log_likelihood(theta_vec, samples, model):
    """Sum over samples of log P(choice | partial); see ConditionalKdppModel."""
    return model.log_likelihood(theta_vec, samples)
