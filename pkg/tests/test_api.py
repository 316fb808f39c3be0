"""The package-level surface used in the README."""

import rulelens as rl


def test_readme_walkthrough():
    e = rl.parse("If twqk equal to no, then it is seldom fem")
    assert rl.render(e) == "If twqk equal to no, then it is seldom fem"
    assert rl.quantifier_confidence("seldom") == 0.10

    task = rl.generate_task(
        rl.ComplexityDescriptor(quantifier=False, conjunction="simple", negation="label"),
        num_features=5, n_train=40, n_test=200, seed=7,
    )
    assert rl.faithfulness(task.planted, task.train) == 1.0
    assert rl.simulatability(task.planted, task.test) == 1.0

    result = rl.explain(task.train, rl.SearchConfig(strategy=rl.SearchStrategy.PER_FEATURE))
    assert 0.0 <= result.report.faithfulness <= 1.0
    assert rl.render(result.best).startswith("If ")


def test_version():
    assert rl.__version__
