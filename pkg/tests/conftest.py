import pytest

from stockflow import classify, compile_model, load_bundled, run


@pytest.fixture(scope="session")
def baseline_ast():
    return load_bundled("pharma-baseline")


@pytest.fixture(scope="session")
def improved_ast():
    return load_bundled("pharma-improved")


@pytest.fixture(scope="session")
def baseline_classified(baseline_ast):
    return classify(baseline_ast)


@pytest.fixture(scope="session")
def improved_classified(improved_ast):
    return classify(improved_ast)


@pytest.fixture(scope="session")
def baseline_compiled(baseline_classified):
    return compile_model(baseline_classified)


@pytest.fixture(scope="session")
def improved_compiled(improved_classified):
    return compile_model(improved_classified)


@pytest.fixture(scope="session")
def baseline_run(baseline_compiled):
    return run(baseline_compiled)


@pytest.fixture(scope="session")
def improved_run(improved_compiled):
    return run(improved_compiled)
