import pytest

import truncquant as tq

# Frozen QAT fixture: 3-class blobs, 2-16-16-3 MLP, seed 7, precisions {2,3,4,8}.
# Hyperparameters pinned after a scan; see the acceptance tests for what the
# two models must exhibit.
FIXTURE_SEED = 7
FIXTURE_PRECISIONS = (2, 3, 4, 8)
FIXTURE_EPOCHS = 300
FIXTURE_BATCH = 128
FIXTURE_LR = 0.01


def fixture_config(scheme: str) -> tq.TrainConfig:
    return tq.TrainConfig(
        scheme=scheme,
        precision_set=FIXTURE_PRECISIONS,
        epochs=FIXTURE_EPOCHS,
        batch_size=FIXTURE_BATCH,
        learning_rate=FIXTURE_LR,
        seed=FIXTURE_SEED,
        dataset=tq.DatasetSpec(seed=FIXTURE_SEED),
    )


@pytest.fixture(scope="session")
def blobs_data():
    return tq.make_dataset(tq.DatasetSpec(seed=FIXTURE_SEED))


@pytest.fixture(scope="session")
def truncquant_model():
    model, _ = tq.train(fixture_config(tq.TRUNCQUANT))
    return model


@pytest.fixture(scope="session")
def uniform_model():
    model, _ = tq.train(fixture_config(tq.UNIFORM))
    return model
