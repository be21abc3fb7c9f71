import pytest
import torch

from stdcformer.data.dataset import Dataset
from stdcformer.data.synthetic import SyntheticProfile, generate_synthetic
from stdcformer.nn.model import ModelConfig, STDCFormer


def make_dataset(n=4, length=24 * 10, seed=7, **profile_kw) -> Dataset:
    profile = SyntheticProfile(**profile_kw)
    data = generate_synthetic(n, length, seed, profile)
    return Dataset(flow=data.flow, temporal=data.temporal,
                   spatial=data.spatial, graph=data.graph)


@pytest.fixture(scope="session")
def tiny_dataset() -> Dataset:
    return make_dataset()


def tiny_config(**overrides) -> ModelConfig:
    base = dict(
        t_dim=3, s_dim=2, features=2, hidden_dim=4, lap_dim=1,
        encoder_layers=1, decoder_layers=1, heads=1,
        past_steps=2, future_steps=2, seed=0,
    )
    base.update(overrides)
    return ModelConfig(**base)


def random_inputs(config: ModelConfig, n: int, rng, batch=None, dtype=torch.float64):
    def t(shape):
        return torch.as_tensor(rng.normal(size=shape), dtype=dtype)

    lead = () if batch is None else (batch,)
    return dict(
        x=t(lead + (config.past_steps, n, config.features)),
        t_past=t(lead + (config.past_steps, config.t_dim)),
        t_future=t(lead + (config.future_steps, config.t_dim)),
        s_rows=t((n, config.s_dim)),
        lap=t((n, config.lap_dim)),
    )


def build_model(config: ModelConfig, double=True) -> STDCFormer:
    model = STDCFormer(config)
    return model.double() if double else model


def nudge_parameters(model: STDCFormer, seed: int, scale: float = 0.2) -> STDCFormer:
    """Shift every parameter to a generic position.

    Zero biases put ReLU pre-activations exactly on the kink, where central
    finite differences straddle the non-differentiable point; gradient checks
    must run away from that measure-zero set.
    """
    gen = torch.Generator().manual_seed(seed)
    with torch.no_grad():
        for p in model.parameters():
            p.add_(torch.empty_like(p).uniform_(-scale, scale, generator=gen))
    return model


def pytest_terminal_summary(terminalreporter):
    """One pass/fail line per acceptance criterion at the end of the run."""
    lines = []
    for outcome in ("passed", "failed"):
        for report in terminalreporter.stats.get(outcome, []):
            if report.when == "call" and "test_acceptance" in report.nodeid:
                name = report.nodeid.split("::")[-1]
                lines.append((name, outcome.upper()))
    if lines:
        terminalreporter.write_sep("-", "acceptance criteria")
        for name, outcome in sorted(lines):
            terminalreporter.write_line(f"{outcome:7s}{name}")
