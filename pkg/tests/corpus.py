"""Surface-form coverage corpus for the explanation grammar.

Every template the language supports, as concrete sentences: plain rules,
AND/OR conjunctions, clause and label negation, every hedging construction,
named targets (single- and multi-word), trailing periods, numeric and text
values. Each entry pairs the input with its canonical rendering.
"""

CORPUS: list[tuple[str, str]] = [
    # plain single conditions
    ("If pdsu lesser than or equal to 1014, then no",
     "If pdsu lesser than or equal to 1014, then no"),
    ("If vpgu equal to antartica, then blicket",
     "If vpgu equal to antartica, then blicket"),
    # hedged forms
    ("If pdsu not greater than 1020, then it is certainly no",
     "If pdsu not greater than 1020, then it is certainly no"),
    ("If vpgu equal to antartica, then it is definitely blicket",
     "If vpgu equal to antartica, then it is definitely blicket"),
    ("If twqk equal to no, then it is seldom fem",
     "If twqk equal to no, then it is seldom fem"),
    ("If bgbs not equal to 4, then it is certainly 2",
     "If bgbs not equal to 4, then it is certainly 2"),
    ("If bgbs equal to 4, then it is seldom 2",
     "If bgbs equal to 4, then it is seldom 2"),
    ("If hxva equal to africas, then it is definitely tupa",
     "If hxva equal to africas, then it is definitely tupa"),
    ("If kjwx not lesser than 19, then it is likely 1",
     "If kjwx not lesser than 19, then it is likely 1"),
    # conjunctions, with and without a trailing period
    ("If aehw equal to no AND hxva equal to africas, then tupa.",
     "If aehw equal to no AND hxva equal to africas, then tupa"),
    ("If aehw equal to no AND hxva equal to africas, then tupa",
     "If aehw equal to no AND hxva equal to africas, then tupa"),
    ("If kjwx greater than or equal to 18 OR bzjf greater than 1601, then it is definitely 1.",
     "If kjwx greater than or equal to 18 OR bzjf greater than 1601, then it is definitely 1"),
    # negations
    ("If bgbs not equal to 4, then 2",
     "If bgbs not equal to 4, then 2"),
    ("If aehw equal to yes, then not tupa.",
     "If aehw equal to yes, then not tupa"),
    ("If szoj not equal to 3, then not 5",
     "If szoj not equal to 3, then not 5"),
    # real-feature styles: decimals, uppercase names, named targets
    ("If skewness lesser than or equal to 3.049, then it is occasionally Fake.",
     "If skewness lesser than or equal to 3.049, then it is occasionally Fake"),
    ("If kurtosis lesser than or equal to 0.995, then it is often Fake",
     "If kurtosis lesser than or equal to 0.995, then it is often Fake"),
    ("If kurtosis lesser than 9600, then it is frequently Fake",
     "If kurtosis lesser than 9600, then it is frequently Fake"),
    ("If SGPT lesser than or equal to 39, then patient is generally No",
     "If SGPT lesser than or equal to 39, then patient is generally No"),
    ("If age lesser than or equal to 39, then patient is generally No",
     "If age lesser than or equal to 39, then patient is generally No"),
    ("If middle-middle-square equal to x, then Game over is sometimes positive",
     "If middle-middle-square equal to x, then Game over is sometimes positive"),
]
