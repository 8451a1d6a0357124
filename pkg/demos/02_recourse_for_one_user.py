"""
Individualized recourse for a rejected applicant
================================================

Trains a small credit classifier, picks a rejected individual, and asks the
exhaustive-search solver for the cheapest feature changes that flip the
decision — first without constraints, then under a personal actionability
profile that forbids touching income and savings.
"""

import numpy as np

from causalrecourse import classifier, scm
from causalrecourse.classifier import ClassifierConfig
from causalrecourse.oracle import OracleConfig, solve
from causalrecourse.preferences import PreferenceProfile, binary_profile
from causalrecourse.scm import ACTIONABLE

ds = scm.sample_population(5000, seed=0)
clf, _ = classifier.train(ds, ClassifierConfig(epochs=150))

# The deployment pool is everyone the classifier rejects.
deploy = ds.indices("deploy")
rejected = deploy[clf.predict(ds.X[deploy]) == 0]
x = ds.X[rejected[0]]
print("rejected individual:", np.round(x, 3))

config = OracleConfig.from_dataset(ds)

# Case 1: all four globally actionable features are available.
r = solve(x, binary_profile(ACTIONABLE), clf, config)
print("\nunconstrained recourse")
print("  action:", {k: round(v, 3) for k, v in r.action.items()})
print("  valid:", r.valid, " cost:", round(r.cost_unweighted, 3))

# Case 2: the user ranks loan amount easiest to change, duration second,
# and cannot act on income or savings at all (scores at the ceiling are
# individually non-actionable).
profile = PreferenceProfile({"LA": 1, "Dur": 2, "Inc": 5, "Sav": 5})
print("\npersonal profile, actionable set:", profile.actionable_set)
r2 = solve(x, profile, clf, config)
print("  action:", {k: round(v, 3) for k, v in r2.action.items()})
print("  valid:", r2.valid, " cost:",
      round(r2.cost_unweighted, 3) if r2.valid else "n/a")

# Constraining the actionable set can only make recourse harder: the
# achievable cost rises, or recourse disappears entirely — the central
# trade-off the experiments quantify at population scale.
