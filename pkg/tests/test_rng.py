import math

import numpy as np

from qmaxent import RandomStream
from qmaxent.rng import _splitmix64


class TestRandomStream:
    def test_deterministic(self):
        a = RandomStream(12345)
        b = RandomStream(12345)
        assert [a.next_u64() for _ in range(20)] == [
            b.next_u64() for _ in range(20)
        ]

    def test_seed_sensitivity(self):
        assert RandomStream(1).next_u64() != RandomStream(2).next_u64()

    def test_uniform_range(self):
        s = RandomStream(7)
        xs = [s.uniform() for _ in range(5000)]
        assert all(0.0 <= x < 1.0 for x in xs)
        assert abs(np.mean(xs) - 0.5) < 0.02

    def test_normal_consumes_two_draws(self):
        a = RandomStream(99)
        b = RandomStream(99)
        a.normal()
        b.next_u64()
        b.next_u64()
        assert a.next_u64() == b.next_u64()

    def test_normal_moments(self):
        s = RandomStream(2024)
        xs = np.array(s.normals(20000))
        assert abs(xs.mean()) < 3.0 / math.sqrt(len(xs))
        assert abs(xs.std() - 1.0) < 0.02

    def test_reference_vectors(self):
        # xoshiro256** from state {1,2,3,4} (reference implementation)
        s = RandomStream(0)
        s._s = [1, 2, 3, 4]
        assert [s.next_u64() for _ in range(5)] == [
            11520,
            0,
            1509978240,
            1215971899390074240,
            1216172134540287360,
        ]
        # splitmix64 from seed 1234567 (reference implementation)
        state, outs = 1234567, []
        for _ in range(3):
            state, v = _splitmix64(state)
            outs.append(v)
        assert outs == [
            6457827717110365317,
            3203168211198807973,
            9817491932198370423,
        ]

    def test_known_stream_frozen(self):
        # frozen values pin the exact generator recipe; any change to the
        # seeding or sampling order breaks reproducibility of instances
        s = RandomStream(100)
        first = [s.next_u64() for _ in range(3)]
        assert first == [
            792317387143481937,
            1418856489092323125,
            6662743737787356053,
        ]
        s2 = RandomStream(100)
        vals = s2.normals(2)
        np.testing.assert_allclose(
            vals, [0.26237981928838333, -0.927037005379523], rtol=1e-15
        )
