"""Random-forest scoring on the bundled digits table.

The dataset is the UCI optical-digits set shipped with scikit-learn:
1797 rows, 64 numeric features, 10 balanced classes. It stands in for
large private tabular data; the interesting part is the objective shape
(1 - accuracy, so lower is better), not the absolute numbers.

Two evaluation modes:
    holdout  fit on a stratified 80% split, score accuracy on the rest
    cv3      3-fold cross-validation, objective from the mean accuracy

The train/test partition is fixed by the process-level seed; the
forest's internal randomness is seeded from the request id, so a given
(seed, id, params) triple always scores identically.
"""

from __future__ import annotations

from sklearn.datasets import load_digits
from sklearn.ensemble import RandomForestClassifier
from sklearn.metrics import accuracy_score
from sklearn.model_selection import KFold, train_test_split

MODES = ("holdout", "cv3")


class UnknownParameter(ValueError):
    pass


def _fraction(value):
    value = float(value)
    if not 0.0 < value <= 1.0:
        raise ValueError(f"max_features must be in (0, 1], got {value}")
    return value


# tunable forest dimensions: tree count, depth, split minimum, feature
# fraction, plus one categorical so every wire type is exercised
PARAM_CASTS = {
    "n_estimators": int,
    "max_depth": int,
    "min_samples_split": int,
    "max_features": _fraction,
    "criterion": str,
}


class DigitsScorer:
    """Trains one forest per request and returns 1 - accuracy."""

    def __init__(self, mode: str = "holdout", seed: int = 0):
        if mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
        self.mode = mode
        self.seed = seed
        self.features, self.labels = load_digits(return_X_y=True)

    def cast_params(self, params: dict) -> dict:
        unknown = sorted(set(params) - set(PARAM_CASTS))
        if unknown:
            raise UnknownParameter(f"unknown parameter name: {unknown[0]}")
        return {name: PARAM_CASTS[name](value) for name, value in params.items()}

    def _model(self, params: dict, request_id: int) -> RandomForestClassifier:
        return RandomForestClassifier(random_state=request_id, **params)

    def score(self, params: dict, request_id: int) -> float:
        """Objective for one hyperparameter assignment, in [0, 1]."""
        params = self.cast_params(params)
        if self.mode == "holdout":
            x_train, x_test, y_train, y_test = train_test_split(
                self.features,
                self.labels,
                test_size=0.2,
                random_state=self.seed,
                stratify=self.labels,
            )
            model = self._model(params, request_id)
            model.fit(x_train, y_train)
            accuracy = accuracy_score(y_test, model.predict(x_test))
        else:
            folds = KFold(n_splits=3, shuffle=True, random_state=self.seed)
            accuracies = []
            for train_idx, test_idx in folds.split(self.features):
                model = self._model(params, request_id)
                model.fit(self.features[train_idx], self.labels[train_idx])
                predicted = model.predict(self.features[test_idx])
                accuracies.append(accuracy_score(self.labels[test_idx], predicted))
            accuracy = sum(accuracies) / len(accuracies)
        return 1.0 - float(accuracy)
