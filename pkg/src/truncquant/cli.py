"""Command-line surface: quantize, truncate, analyze, train, eval, storage.

Exit codes: 0 on success, 2 on validation errors (bad flags, bad values,
precision-order violations), 3 on file-format errors.  All file outputs
are written atomically.  ``TQT_SEED`` overrides ``--seed`` when set.
"""

from __future__ import annotations

import csv
import functools
import io
import os
import sys

import click
import numpy as np

from . import fileio, qat, storage
from .analysis import NORM_KINDS, QtReport, qt_error
from .datasets import BLOBS, MOONS, DatasetSpec, make_dataset
from .errors import FormatError, TruncQuantError
from .quantize import (
    SCHEMES,
    QuantConfig,
    QuantizedTensor,
    quantize as quantize_op,
)
from .tensors import DOREFA_TANH, NORM_MODES, normalize
from .truncate import truncate as truncate_op

_EXIT_VALIDATION = 2
_EXIT_FORMAT = 3


def _handle_errors(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except FormatError as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(_EXIT_FORMAT)
        except TruncQuantError as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(_EXIT_VALIDATION)

    return wrapper


def _parse_bits_list(spec: str, flag: str) -> list[int]:
    """Accept a 'lo-hi' range or a comma list; expansion is ascending."""
    spec = spec.strip()
    try:
        if "-" in spec:
            lo_s, hi_s = spec.split("-", 1)
            lo, hi = int(lo_s), int(hi_s)
            if lo > hi:
                raise ValueError
            values = list(range(lo, hi + 1))
        else:
            values = sorted({int(part) for part in spec.split(",")})
    except ValueError:
        raise click.BadParameter(
            f"expected 'lo-hi' or a comma list, got {spec!r}", param_hint=flag
        ) from None
    if not values:
        raise click.BadParameter("no bit widths given", param_hint=flag)
    return values


def _parse_int_list(spec: str, flag: str) -> list[int]:
    """Comma list of positive integers, order and duplicates preserved."""
    try:
        values = [int(part) for part in spec.split(",")]
    except ValueError:
        raise click.BadParameter(
            f"expected a comma list of integers, got {spec!r}", param_hint=flag
        ) from None
    if not values or any(v < 1 for v in values):
        raise click.BadParameter("sizes must be positive", param_hint=flag)
    return values


def _seed_override(seed: int) -> int:
    env = os.environ.get("TQT_SEED")
    return int(env) if env else seed


def _write_csv(path, header, rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    fileio._atomic_write(path, buf.getvalue().encode("utf-8"))


def _dataset_spec(dataset, data_seed, sigma, noise, train_size, test_size):
    return DatasetSpec(
        kind=dataset,
        n_train=train_size,
        n_test=test_size,
        sigma=sigma,
        noise=noise,
        seed=data_seed,
    )


@click.group()
def main():
    """Truncation-ready weight quantization toolkit."""


@main.command(name="quantize")
@click.option("--input", "input_path", required=True,
              type=click.Path(exists=True, dir_okay=False), help="Raw tensor or checkpoint.")
@click.option("--output", "output_path", required=True, type=click.Path(dir_okay=False))
@click.option("--bits", required=True, type=click.IntRange(1, 16))
@click.option("--scheme", type=click.Choice(SCHEMES), default="truncquant", show_default=True)
@click.option("--normalize", "norm_mode", type=click.Choice(NORM_MODES),
              default=DOREFA_TANH, show_default=True)
@_handle_errors
def cmd_quantize(input_path, output_path, bits, scheme, norm_mode):
    """Quantize float weights to integer bins."""
    obj = fileio.read_any(input_path)
    cfg = QuantConfig(bits)
    if isinstance(obj, dict):
        model = qat.model_from_records(obj)
        if not any(layer.quantize for layer in model.layers):
            raise click.UsageError(
                "checkpoint has no quantizable layers (--input)")
        fileio.write_checkpoint(output_path, qat.quantized_records(model, bits, scheme))
    elif isinstance(obj, QuantizedTensor):
        raise click.UsageError("--input is already quantized")
    else:
        wn, params = normalize(obj, norm_mode)
        fileio.write_tensor(output_path, quantize_op(wn, cfg, scheme, norm=params))
    click.echo(f"wrote {output_path}")


@main.command(name="truncate")
@click.option("--input", "input_path", required=True,
              type=click.Path(exists=True, dir_okay=False), help="Quantized tensor or checkpoint.")
@click.option("--output", "output_path", required=True, type=click.Path(dir_okay=False))
@click.option("--to", "target_bits", required=True, type=click.IntRange(1, 16))
@_handle_errors
def cmd_truncate(input_path, output_path, target_bits):
    """Lower the precision of quantized bins by bit-shifting."""
    obj = fileio.read_any(input_path)
    if isinstance(obj, dict):
        out = {
            name: truncate_op(rec, target_bits)
            if isinstance(rec, QuantizedTensor) else rec
            for name, rec in obj.items()
        }
        fileio.write_checkpoint(output_path, out)
    elif isinstance(obj, QuantizedTensor):
        fileio.write_tensor(output_path, truncate_op(obj, target_bits))
    else:
        raise click.UsageError("--input holds raw floats; quantize it first")
    click.echo(f"wrote {output_path}")


@main.command(name="analyze")
@click.option("--input", "input_path", required=True,
              type=click.Path(exists=True, dir_okay=False), help="Raw tensor or checkpoint.")
@click.option("--output", "output_path", required=True, type=click.Path(dir_okay=False))
@click.option("--start-bits", default=8, show_default=True, type=click.IntRange(2, 16))
@click.option("--bits", "bits_spec", default="1-7", show_default=True,
              help="Target widths: 'lo-hi' or comma list.")
@click.option("--scheme", type=click.Choice(SCHEMES), default="uniform", show_default=True)
@click.option("--norm", "norm_kind", type=click.Choice(NORM_KINDS), default="l1",
              show_default=True, help="Distance used for the error metrics.")
@click.option("--normalize", "norm_mode", type=click.Choice(NORM_MODES),
              default=DOREFA_TANH, show_default=True)
@_handle_errors
def cmd_analyze(input_path, output_path, start_bits, bits_spec, scheme, norm_kind, norm_mode):
    """Report gap counts and error metrics per layer and bit width."""
    bits_list = _parse_bits_list(bits_spec, "--bits")
    if bits_list[-1] >= start_bits:
        raise click.BadParameter(
            f"every target width must be below --start-bits {start_bits}",
            param_hint="--bits",
        )
    obj = fileio.read_any(input_path)
    if isinstance(obj, dict):
        tensors = {
            name: rec for name, rec in obj.items()
            if not isinstance(rec, QuantizedTensor) and name != qat._MASK_RECORD
        }
        if not tensors:
            raise click.UsageError("checkpoint holds no raw float tensors (--input)")
    elif isinstance(obj, QuantizedTensor):
        raise click.UsageError("--input is already quantized; analysis needs floats")
    else:
        tensors = {"tensor": obj}

    rows = []
    for name, values in tensors.items():
        wn, params = normalize(values, norm_mode)
        for bits in bits_list:
            report = qt_error(
                wn, bits, start_bits, scheme, norm_kind,
                delta_prime=params.delta_prime, layer=name,
            )
            rows.append(report.csv_row())
    _write_csv(output_path, QtReport.CSV_HEADER, rows)
    click.echo(f"wrote {output_path} ({len(rows)} rows)")


@main.command(name="train")
@click.option("--output", "output_path", required=True, type=click.Path(dir_okay=False),
              help="Checkpoint destination.")
@click.option("--log", "log_path", type=click.Path(dir_okay=False),
              help="Optional training-curve CSV.")
@click.option("--scheme", type=click.Choice(SCHEMES), default="truncquant", show_default=True)
@click.option("--precisions", default="2,3,4,8", show_default=True,
              help="Comma list of widths sampled during training.")
@click.option("--epochs", default=200, show_default=True, type=click.IntRange(min=1))
@click.option("--batch-size", default=64, show_default=True, type=click.IntRange(min=1))
@click.option("--lr", default=0.1, show_default=True, type=float)
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--hidden", default="16,16", show_default=True,
              help="Comma list of hidden layer sizes.")
@click.option("--dataset", type=click.Choice((BLOBS, MOONS)), default=BLOBS, show_default=True)
@click.option("--data-seed", default=0, show_default=True, type=int)
@click.option("--sigma", default=0.3, show_default=True, type=float,
              help="Blob cluster spread.")
@click.option("--noise", default=0.2, show_default=True, type=float,
              help="Moons noise level.")
@click.option("--train-size", default=3000, show_default=True, type=click.IntRange(min=1))
@click.option("--test-size", default=600, show_default=True, type=click.IntRange(min=1))
@_handle_errors
def cmd_train(output_path, log_path, scheme, precisions, epochs, batch_size, lr, seed,
              hidden, dataset, data_seed, sigma, noise, train_size, test_size):
    """Train the toy MLP with fake-quantized weights."""
    config = qat.TrainConfig(
        scheme=scheme,
        precision_set=tuple(_parse_bits_list(precisions, "--precisions")),
        epochs=epochs,
        batch_size=batch_size,
        learning_rate=lr,
        seed=_seed_override(seed),
        dataset=_dataset_spec(dataset, data_seed, sigma, noise, train_size, test_size),
        hidden=tuple(_parse_int_list(hidden, "--hidden")),
    )
    model, log = qat.train(config)
    qat.save_model(output_path, model)
    click.echo(f"wrote {output_path}")
    if log_path:
        _write_csv(
            log_path,
            ("epoch", "n_sampled", "loss", "train_acc"),
            [(s.epoch, s.n_sampled, repr(s.loss), repr(s.train_acc)) for s in log],
        )
        click.echo(f"wrote {log_path} ({len(log)} rows)")
    data = make_dataset(config.dataset)
    acc = qat.evaluate(model, data, bits=None)
    click.echo(f"full-precision test accuracy={acc:.4f}")


@main.command(name="eval")
@click.option("--model", "model_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--bits", type=click.IntRange(1, 8),
              help="Fake-quantize master weights at this width; omit to use stored weights.")
@click.option("--mode", type=click.Choice((qat.QUANT_MODE, qat.TRUNC_MODE)),
              default=qat.QUANT_MODE, show_default=True)
@click.option("--start-bits", default=8, show_default=True, type=click.IntRange(1, 16))
@click.option("--scheme", type=click.Choice(SCHEMES), default="truncquant", show_default=True)
@click.option("--dataset", type=click.Choice((BLOBS, MOONS)), default=BLOBS, show_default=True)
@click.option("--seed", "data_seed", default=0, show_default=True, type=int,
              help="Dataset seed; must match training for a comparable split.")
@click.option("--sigma", default=0.3, show_default=True, type=float)
@click.option("--noise", default=0.2, show_default=True, type=float)
@click.option("--train-size", default=3000, show_default=True, type=click.IntRange(min=1))
@click.option("--test-size", default=600, show_default=True, type=click.IntRange(min=1))
@_handle_errors
def cmd_eval(model_path, bits, mode, start_bits, scheme, dataset, data_seed,
             sigma, noise, train_size, test_size):
    """Report test accuracy of a checkpoint."""
    model = qat.load_model(model_path)
    spec = _dataset_spec(dataset, _seed_override(data_seed), sigma, noise,
                         train_size, test_size)
    data = make_dataset(spec)
    acc = qat.evaluate(model, data, bits=bits, mode=mode,
                       start_bits=start_bits, scheme=scheme)
    click.echo(f"accuracy={acc:.6f}")


@main.command(name="storage")
@click.option("--layers", "layers_path", required=True,
              type=click.Path(exists=True, dir_okay=False),
              help="CSV with columns name,param_count,first_or_last.")
@click.option("--strategy", type=click.Choice((*storage.STRATEGIES, "all")),
              default="all", show_default=True)
@click.option("--dedicated-bits", default="2,4,8", show_default=True,
              help="Widths kept as dedicated models.")
@click.option("--max-bits", default=8, show_default=True, type=click.IntRange(1, 16),
              help="Maximum width of the truncation switching range.")
@click.option("--output", "output_path", type=click.Path(dir_okay=False),
              help="Optional CSV destination; default prints to stdout.")
@_handle_errors
def cmd_storage(layers_path, strategy, dedicated_bits, max_bits, output_path):
    """Compare storage footprints of the precision-switching strategies."""
    layers = storage.read_layer_table(layers_path)
    bits_list = _parse_bits_list(dedicated_bits, "--dedicated-bits")
    rows = storage.storage_report(layers, bits_list, max_bits)
    if strategy != "all":
        rows = [r for r in rows if r.strategy == strategy]
    header = ("strategy", "total_bytes", "ratio_vs_truncquant")
    table = [(r.strategy, repr(r.total_bytes), f"{r.ratio_vs_truncquant:.4f}")
             for r in rows]
    if output_path:
        _write_csv(output_path, header, table)
        click.echo(f"wrote {output_path}")
    else:
        click.echo(",".join(header))
        for row in table:
            click.echo(",".join(row))


if __name__ == "__main__":
    main()
