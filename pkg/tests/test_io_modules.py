"""Tests for modular I/O functions."""

import json
import os
import struct
from unittest.mock import patch

import numpy as np
import pytest

from dual_domain_fusion.core.config import FusionConfig
from dual_domain_fusion.core.fusion import init_fusion_params
from dual_domain_fusion.core.tensor import Tensor
from dual_domain_fusion.errors import (
    ConfigurationError,
    ImageFormatError,
    InvalidShapeError,
    ScoreFileError,
    TensorFormatError,
)
from dual_domain_fusion.io.readers import (
    decode_tensor,
    load_config,
    load_features,
    read_checkpoint,
    read_image,
    read_json,
    read_pairs,
    read_scores,
    read_tensor,
)
from dual_domain_fusion.io.writers import (
    atomic_write_text,
    dump_json,
    encode_tensor,
    save_features,
    staged_directory,
    write_checkpoint,
    write_image,
    write_json,
    write_jsonl,
    write_scores,
    write_tensor,
)
from dual_domain_fusion.postprocessing.metrics import ScoreSet


def d2ft_bytes(extents, values=None, version=1):
    header = b'D2FT' + struct.pack('<II', version, len(extents)) + struct.pack(f'<{len(extents)}I', *extents)
    if values is None:
        values = np.zeros(int(np.prod(extents)) if extents else 0, dtype='<f4')
    return header + np.asarray(values, dtype='<f4').tobytes()


class TestTensorFormat:
    """Test D2FT encoding and decoding."""

    def test_header_layout(self):
        """Header is magic, version, rank and extents, all little-endian."""
        payload = encode_tensor(np.arange(6, dtype=np.float32).reshape(2, 3))
        assert payload[:4] == b'D2FT'
        assert struct.unpack('<4I', payload[4:20]) == (1, 2, 2, 3)
        assert len(payload) == 20 + 6 * 4

    def test_round_trip_is_bit_exact(self, temp_dir, random_features):
        """Writing then reading returns identical bytes."""
        path = save_features(temp_dir / 'x.d2ft', random_features)
        restored = read_tensor(path)
        assert restored.dtype == np.float32
        assert restored.tobytes() == random_features.tobytes()
        assert load_features(path).shape == (8, 16, 16)

    def test_tensor_input(self, temp_dir):
        """Tensors are written from their stored values."""
        tensor = Tensor([[1.5, -2.0]])
        np.testing.assert_array_equal(read_tensor(write_tensor(temp_dir / 't.d2ft', tensor)), [[1.5, -2.0]])

    def test_bad_magic(self):
        with pytest.raises(TensorFormatError):
            decode_tensor(b'NOPE' + d2ft_bytes([2])[4:])

    def test_bad_version(self):
        with pytest.raises(TensorFormatError):
            decode_tensor(d2ft_bytes([2], version=2))

    def test_truncated_payload(self):
        """One missing value byte is rejected."""
        with pytest.raises(TensorFormatError):
            decode_tensor(d2ft_bytes([2, 2])[:-1])

    def test_trailing_bytes(self):
        with pytest.raises(TensorFormatError):
            decode_tensor(d2ft_bytes([2]) + b'\x00\x00\x00\x00')

    def test_rank_zero(self):
        with pytest.raises(InvalidShapeError):
            decode_tensor(d2ft_bytes([]))

    def test_zero_extent(self):
        with pytest.raises(InvalidShapeError):
            decode_tensor(d2ft_bytes([3, 0]))

    def test_non_finite_payload(self):
        with pytest.raises(TensorFormatError):
            decode_tensor(d2ft_bytes([2], [1.0, np.inf]))

    def test_refuses_scalar(self, temp_dir):
        with pytest.raises(InvalidShapeError):
            write_tensor(temp_dir / 's.d2ft', np.float32(1.0))

    def test_missing_file(self, non_existent_file):
        with pytest.raises(FileNotFoundError):
            read_tensor(non_existent_file)


class TestImages:
    """Test PPM and PNG reading and writing."""

    def test_p6_two_by_one(self, temp_dir):
        """8-bit values map to v / 255."""
        path = temp_dir / 'tiny.ppm'
        path.write_bytes(b'P6\n2 1\n255\n' + bytes([255, 0, 0, 0, 0, 0]))
        pixels = read_image(path)
        assert pixels.shape == (1, 2, 3)
        np.testing.assert_array_equal(pixels[0], [[1.0, 0.0, 0.0], [0.0, 0.0, 0.0]])

    def test_p5_rejected(self, temp_dir):
        """Gray PGM is not an accepted format."""
        path = temp_dir / 'gray.pgm'
        path.write_bytes(b'P5\n2 1\n255\n' + bytes([0, 255]))
        with pytest.raises(ImageFormatError):
            read_image(path)

    @pytest.mark.parametrize('suffix', ['.png', '.ppm'])
    def test_round_trip_within_half_step(self, temp_dir, rng, suffix):
        """Quantization error stays below half an 8-bit step."""
        image = rng.uniform(0.0, 1.0, size=(9, 7, 3))
        restored = read_image(write_image(temp_dir / f'img{suffix}', image))
        assert restored.shape == (9, 7, 3)
        assert np.abs(restored - image).max() <= 0.5 / 255 + 1e-12

    def test_gray_png(self, temp_dir, rng):
        image = rng.uniform(0.0, 1.0, size=(4, 5))
        restored = read_image(write_image(temp_dir / 'gray.png', image))
        assert restored.shape == (4, 5, 1)

    def test_ppm_round_trip_is_lossless(self, temp_dir):
        """Exact 8-bit levels survive a write/read cycle unchanged."""
        levels = np.arange(48, dtype=np.float64).reshape(4, 4, 3) * 5 / 255.0
        restored = read_image(write_image(temp_dir / 'levels.ppm', levels))
        np.testing.assert_array_equal(restored, levels)

    def test_truncated_ppm(self, temp_dir):
        path = temp_dir / 'short.ppm'
        path.write_bytes(b'P6\n4 4\n255\n' + bytes(10))
        with pytest.raises(ImageFormatError):
            read_image(path)

    def test_sixteen_bit_ppm(self, temp_dir):
        path = temp_dir / 'deep.ppm'
        path.write_bytes(b'P6\n1 1\n65535\n' + bytes(6))
        with pytest.raises(ImageFormatError):
            read_image(path)

    def test_unsupported_suffix(self, temp_dir):
        with pytest.raises(ImageFormatError):
            write_image(temp_dir / 'img.jpg', np.zeros((2, 2, 3)))


class TestScoresAndConfig:
    """Test score tables, JSON configs and pair lists."""

    def test_scores_round_trip(self, temp_dir):
        score_set = ScoreSet.from_lists([0.25, 0.75, 0.5], [0, 1, 1])
        restored = read_scores(write_scores(temp_dir / 'scores.csv', score_set))
        np.testing.assert_array_equal(restored.scores, score_set.scores)
        np.testing.assert_array_equal(restored.labels, score_set.labels)

    def test_scores_wrong_header(self, temp_dir):
        path = temp_dir / 'bad.csv'
        path.write_text('prob,target\n0.1,0\n')
        with pytest.raises(ScoreFileError):
            read_scores(path)

    def test_scores_bad_label(self, temp_dir):
        path = temp_dir / 'bad.csv'
        path.write_text('score,label\n0.1,3\n')
        with pytest.raises(ScoreFileError):
            read_scores(path)

    def test_scores_non_numeric(self, temp_dir):
        path = temp_dir / 'bad.csv'
        path.write_text('score,label\nhigh,1\n')
        with pytest.raises(ScoreFileError):
            read_scores(path)

    def test_load_config(self, temp_dir):
        path = write_json(temp_dir / 'cfg.json', {'C': 4, 'reduction': 2, 'n': 2, 'r_e': 2, 'freqs': [[0, 0], [1, 1]]})
        config = load_config(path)
        assert isinstance(config, FusionConfig)
        assert config.frequencies() == [(0, 0), (1, 1)]

    def test_config_must_be_object(self, temp_dir):
        path = temp_dir / 'cfg.json'
        path.write_text('[1, 2]')
        with pytest.raises(ConfigurationError):
            load_config(path)

    def test_invalid_json(self, temp_dir):
        path = temp_dir / 'cfg.json'
        path.write_text('{"C": ')
        with pytest.raises(ConfigurationError):
            read_json(path)

    def test_pairs(self, temp_dir):
        path = temp_dir / 'pairs.jsonl'
        path.write_text('{"fake": "a.png", "source": "b.png", "out": "c.png"}\n\n')
        assert read_pairs(path) == [{'fake': 'a.png', 'source': 'b.png', 'out': 'c.png'}]

    def test_pairs_missing_key(self, temp_dir):
        path = temp_dir / 'pairs.jsonl'
        path.write_text('{"fake": "a.png"}\n')
        with pytest.raises(ConfigurationError):
            read_pairs(path)


class TestWriters:
    """Test JSON output and atomic replacement."""

    def test_dump_json_is_stable(self):
        assert dump_json({'b': 1, 'a': [1, 2]}) == '{\n  "a": [\n    1,\n    2\n  ],\n  "b": 1\n}\n'

    def test_jsonl_append(self, temp_dir):
        path = temp_dir / 'manifest.jsonl'
        write_jsonl(path, [{'x_t': 0}])
        write_jsonl(path, [{'x_t': 4}], append=True)
        assert [json.loads(line) for line in path.read_text().splitlines()] == [{'x_t': 0}, {'x_t': 4}]

    def test_jsonl_overwrite(self, temp_dir):
        path = temp_dir / 'manifest.jsonl'
        write_jsonl(path, [{'x_t': 0}])
        write_jsonl(path, [{'x_t': 4}])
        assert path.read_text() == '{"x_t": 4}\n'

    def test_failed_write_keeps_previous_file(self, temp_dir):
        """An interrupted write leaves neither a partial file nor a temporary one."""
        path = atomic_write_text(temp_dir / 'out.txt', 'old')
        with patch('dual_domain_fusion.io.writers.os.replace', side_effect=OSError('disk full')):
            with pytest.raises(OSError):
                atomic_write_text(path, 'new')
        assert path.read_text() == 'old'
        assert os.listdir(temp_dir) == ['out.txt']

    def test_rewrite_is_byte_identical(self, temp_dir, random_features):
        first = save_features(temp_dir / 'a.d2ft', random_features).read_bytes()
        second = save_features(temp_dir / 'a.d2ft', random_features).read_bytes()
        assert first == second


class TestStagedDirectory:
    """Test run directories that only appear once complete."""

    def test_creates_missing_directory(self, temp_dir):
        with staged_directory(temp_dir / 'run') as staging:
            assert staging.parent == temp_dir.resolve()
            (staging / 'metrics.json').write_text('{}')
            assert not (temp_dir / 'run').exists()
        assert (temp_dir / 'run' / 'metrics.json').read_text() == '{}'
        assert os.listdir(temp_dir) == ['run']

    def test_merges_into_existing_directory(self, temp_dir):
        out = temp_dir / 'run'
        (out / 'checkpoint').mkdir(parents=True)
        (out / 'checkpoint' / 'stale.d2ft').write_bytes(b'old')
        (out / 'notes.txt').write_text('keep')
        (out / 'metrics.json').write_text('old')
        with staged_directory(out) as staging:
            (staging / 'checkpoint').mkdir()
            (staging / 'checkpoint' / 'manifest.json').write_text('{}')
            (staging / 'metrics.json').write_text('new')
        assert (out / 'notes.txt').read_text() == 'keep'
        assert (out / 'metrics.json').read_text() == 'new'
        assert os.listdir(out / 'checkpoint') == ['manifest.json']
        assert os.listdir(temp_dir) == ['run']

    def test_error_leaves_nothing(self, temp_dir):
        with pytest.raises(RuntimeError):
            with staged_directory(temp_dir / 'run') as staging:
                (staging / 'scores.csv').write_text('score,label\n')
                raise RuntimeError('interrupted')
        assert os.listdir(temp_dir) == []

    def test_error_keeps_existing_directory(self, temp_dir):
        out = temp_dir / 'run'
        out.mkdir()
        (out / 'metrics.json').write_text('old')
        with pytest.raises(RuntimeError):
            with staged_directory(out) as staging:
                (staging / 'metrics.json').write_text('new')
                raise RuntimeError('interrupted')
        assert (out / 'metrics.json').read_text() == 'old'
        assert os.listdir(temp_dir) == ['run']


class TestCheckpoint:
    """Test checkpoint directories."""

    def test_round_trip(self, temp_dir, small_config):
        params = init_fusion_params(small_config, seed=5)
        write_checkpoint(temp_dir / 'ckpt', params.all_parameters(), small_config.to_dict())
        arrays, manifest = read_checkpoint(temp_dir / 'ckpt')
        assert manifest['format'] == 'd2ft-checkpoint'
        assert manifest['config'] == small_config.to_dict()
        for name, parameter in params.by_name().items():
            assert arrays[name].tobytes() == parameter.value.data.tobytes()

    def test_shape_disagreement(self, temp_dir, small_config):
        params = init_fusion_params(small_config)
        directory = write_checkpoint(temp_dir / 'ckpt', params.all_parameters())
        write_tensor(directory / 'head.bias.d2ft', np.zeros(3, dtype=np.float32))
        with pytest.raises(TensorFormatError):
            read_checkpoint(directory)
