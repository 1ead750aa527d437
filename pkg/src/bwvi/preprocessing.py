"""CSV ingestion and standardize-then-PCA feature reduction."""

import csv

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .exceptions import MissingColumn, NonNumeric, ParseError, ZeroVariance


def load_dataset(path, config):
    """Read features and binary labels from a headered CSV file.

    Parameters
    ----------
    path : str or Path
    config : mapping
        ``label_column`` (required), ``positive_label`` (optional; when
        given, labels equal to it map to 1 and the single other value maps
        to 0; otherwise labels must already be 0/1), ``pca_components``
        (optional; reduces the features with :func:`preprocess`).

    Returns
    -------
    features : ndarray (n, p)
    labels : ndarray (n,) of 0.0/1.0
    """
    label_column = config.get("label_column")
    if not label_column:
        raise MissingColumn("config does not name a label_column")
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
    except (OSError, UnicodeDecodeError, csv.Error) as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc
    if not rows or not rows[0]:
        raise ParseError(f"{path} has no header row")
    header = [h.strip() for h in rows[0]]
    body = [r for r in rows[1:] if any(cell.strip() for cell in r)]
    if label_column not in header:
        raise MissingColumn(f"label column {label_column!r} not in header")
    for lineno, row in enumerate(body, start=2):
        if len(row) != len(header):
            raise ParseError(f"line {lineno}: expected {len(header)} fields, got {len(row)}")
    label_idx = header.index(label_column)
    raw_labels = [row[label_idx].strip() for row in body]
    labels = _encode_labels(raw_labels, config.get("positive_label"))

    feature_idx = [i for i in range(len(header)) if i != label_idx]
    features = np.empty((len(body), len(feature_idx)))
    for r, row in enumerate(body):
        for c, i in enumerate(feature_idx):
            try:
                features[r, c] = float(row[i])
            except ValueError:
                raise NonNumeric(
                    f"column {header[i]!r}, line {r + 2}: {row[i]!r} is not numeric"
                ) from None

    n_components = config.get("pca_components")
    if n_components:
        features = preprocess(features, int(n_components))
    return features, labels


def _encode_labels(raw, positive_label):
    if positive_label is None:
        try:
            labels = np.array([float(v) for v in raw])
        except ValueError:
            raise NonNumeric("labels are not numeric and no positive_label given") from None
        if not np.all((labels == 0) | (labels == 1)):
            raise ParseError("numeric labels must be 0 or 1")
        return labels
    positive_label = str(positive_label)
    values = set(raw)
    if len(values - {positive_label}) > 1:
        raise ParseError(f"labels take more than two values: {sorted(values)}")
    return np.array([1.0 if v == positive_label else 0.0 for v in raw])


class PCAStandardizer(TransformerMixin, BaseEstimator):
    """Standardize columns, then project on the leading principal directions.

    Directions are eigenvectors of the sample covariance of the standardized
    data in descending eigenvalue order, each signed so that its
    largest-magnitude loading is positive.

    Attributes
    ----------
    mean_, scale_ : ndarray (p,)
    components_ : ndarray (n_components, p)
    explained_variance_ : ndarray (n_components,)
    explained_variance_ratio_ : ndarray (n_components,)
    """

    def __init__(self, n_components=8):
        self.n_components = n_components

    def fit(self, X, y=None):
        X = check_array(X, dtype=float)
        n, p = X.shape
        if not 1 <= self.n_components <= p:
            raise ValueError(f"n_components must be in [1, {p}]")
        if n < 2:
            raise ValueError("need at least two rows")
        self.mean_ = X.mean(axis=0)
        self.scale_ = X.std(axis=0, ddof=1)
        flat = self.scale_ <= 1e-12 * np.maximum(np.abs(self.mean_), 1.0)
        if np.any(flat):
            raise ZeroVariance(f"columns {np.flatnonzero(flat).tolist()} have zero variance")
        Z = (X - self.mean_) / self.scale_
        cov = Z.T @ Z / (n - 1)
        vals, vecs = np.linalg.eigh(cov)
        order = np.argsort(vals)[::-1]
        vals = np.clip(vals[order], 0.0, None)
        vecs = vecs[:, order]
        pivots = np.argmax(np.abs(vecs), axis=0)
        vecs = vecs * np.sign(vecs[pivots, np.arange(p)])
        k = self.n_components
        self.components_ = vecs[:, :k].T
        self.explained_variance_ = vals[:k]
        self.explained_variance_ratio_ = vals[:k] / vals.sum()
        self.n_features_in_ = p
        return self

    def transform(self, X):
        check_is_fitted(self, "components_")
        X = check_array(X, dtype=float)
        return ((X - self.mean_) / self.scale_) @ self.components_.T

    def inverse_transform(self, X):
        check_is_fitted(self, "components_")
        return (np.asarray(X, dtype=float) @ self.components_) * self.scale_ + self.mean_


def preprocess(features, n_components):
    """Standardize ``features`` and keep ``n_components`` principal scores."""
    return PCAStandardizer(n_components).fit_transform(features)
