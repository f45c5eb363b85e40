"""Playing the game many times.

The simulator draws state, signal and action from a counter-based generator,
so a seed pins down the whole run.  Empirical receiver payoffs settle within
a few standard errors of the analytic value.
"""
from quota_robust import (FiniteModel, MyopicRule, Quota, QuotaRule, SenderUtility, SignalStructure,
                          full_revelation, no_info, simulate)

model = FiniteModel(["low", "high"], ["reject", "accept"], [[0.0, -1.0], [0.0, 1.0]], [0.5, 0.5])
noisy = SignalStructure([[0.8, 0.2], [0.2, 0.8]], [0.5, 0.5])
menu = [full_revelation(model), noisy, no_info(model)]
senders = {"wants acceptance": SenderUtility([0.0, 1.0]),
           "wants rejection": SenderUtility([1.0, 0.0])}
rules = {"quota 50/50": QuotaRule(Quota([0.5, 0.5])),
         "quota 30/70": QuotaRule(Quota([0.3, 0.7])),
         "myopic": MyopicRule()}

# %% under a quota the sender cannot move action frequencies, so withholding
# information gains nothing; under the myopic rule a sender who wants
# rejection hides everything and the receiver loses the full-information gain
for who, sender in senders.items():
    print(f"sender {who}:")
    for name, rule in rules.items():
        res = simulate(model, rule, sender, menu, rounds=200_000, seed=42)
        a = res.analytic
        print(f"  {name:12s} picks #{a.chosen_structure}: analytic {a.receiver_value:.4f}, "
              f"empirical {res.receiver_mean:.4f} +/- {res.receiver_se:.4f}, "
              f"efficiency loss {a.efficiency_loss:.3f}, agency loss {a.agency_loss:.3f}")
