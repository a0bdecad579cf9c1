"""Tests for linkable ring signatures."""
import random
from typing import Callable, List, Tuple

import pytest

from zkbid.crypto.accounts import Account, generate_account, seeded_entropy
from zkbid.crypto.lrs import LinkableRingSig, Ring, key_image, link, ring_sign, ring_verify
from zkbid.crypto.primitives import GroupElement, Q, hash_to_point
from zkbid.errors import ConfigError, KeyMismatch, MalformedEncoding, SignerNotInRing


def _accounts(n: int, seed: object) -> List[Account]:
    entropy = seeded_entropy(seed)
    return [generate_account(entropy) for _ in range(n)]


def _ring_with(signer: Account, decoys: List[Account], position: int) -> Ring:
    members = [d.pk for d in decoys]
    members.insert(position, signer.pk)
    return Ring.of(members)


@pytest.fixture(scope="module")
def population() -> List[Account]:
    return _accounts(40, "population")


class TestKeyImage(object):
    def test_definition(self, population: List[Account]):
        a = population[0]
        assert key_image(a.sk, a.pk) == a.sk * hash_to_point(a.pk.encode())
        assert key_image(a.sk, a.pk) == key_image(a.sk, a.pk)

    def test_key_mismatch(self, population: List[Account]):
        with pytest.raises(KeyMismatch):
            key_image(population[0].sk, population[1].pk)

    def test_distinct_images(self, trials: Callable[[int, int], int]):
        n = trials(1000, 100)
        images = {key_image(a.sk, a.pk) for a in _accounts(n, "images")}
        assert len(images) == n


class TestSignVerify(object):
    @pytest.mark.parametrize("size", [1, 2, 4, 11, 32])
    def test_completeness(self, population: List[Account], size: int):
        rnd = random.Random(size)
        members = rnd.sample(population, size)
        ring = Ring.of(m.pk for m in members)
        for _ in range(3):
            index = rnd.randrange(size)
            message = rnd.randbytes(33)
            sig = ring_sign(members[index].sk, index, ring, message)
            assert ring_verify(ring, message, sig)
            assert len(sig.responses) == size

    def test_many_random_cases(self, population: List[Account], trials: Callable[[int, int], int]):
        rnd = random.Random(3)
        for _ in range(trials(100, 10)):
            members = rnd.sample(population, rnd.randrange(1, 6))
            ring = Ring.of(m.pk for m in members)
            index = rnd.randrange(len(members))
            message = rnd.randbytes(40)
            assert ring_verify(ring, message, ring_sign(members[index].sk, index, ring, message))

    def test_single_member_ring_is_schnorr_like(self, population: List[Account]):
        """With n = 1 the chain closes on one step: c1 = H(s*g + c1*pk, s*H_p(pk) + c1*I)."""
        a = population[0]
        ring = Ring.of([a.pk])
        sig = ring_sign(a.sk, 0, ring, b"soul")
        g = GroupElement.generator()
        left = sig.responses[0] * g + sig.c1 * a.pk
        nonce = (sig.responses[0] + sig.c1 * a.sk) % Q
        assert left == nonce * g
        assert ring_verify(ring, b"soul", sig)

    def test_flipped_message_bit(self, population: List[Account]):
        ring = Ring.of(m.pk for m in population[:4])
        message = bytearray(b"pk_soul bytes")
        sig = ring_sign(population[2].sk, 2, ring, bytes(message))
        message[0] ^= 1
        assert not ring_verify(ring, bytes(message), sig)

    def test_replaced_response(self, population: List[Account]):
        ring = Ring.of(m.pk for m in population[:4])
        sig = ring_sign(population[1].sk, 1, ring, b"m")
        for j in range(4):
            responses = list(sig.responses)
            responses[j] = random.Random(j).randrange(Q)
            assert not ring_verify(ring, b"m", sig._replace(responses=tuple(responses)))

    def test_identity_key_image_rejected(self, population: List[Account]):
        ring = Ring.of(m.pk for m in population[:2])
        sig = ring_sign(population[0].sk, 0, ring, b"m")
        assert not ring_verify(ring, b"m", sig._replace(key_image=GroupElement.identity()))

    def test_substituted_ring_rejected(self, population: List[Account]):
        ring = Ring.of(m.pk for m in population[:3])
        sig = ring_sign(population[0].sk, 0, ring, b"m")
        other = Ring.of([population[0].pk, population[1].pk, population[5].pk])
        assert not ring_verify(other, b"m", sig)

    def test_wrong_length(self, population: List[Account]):
        ring = Ring.of(m.pk for m in population[:3])
        sig = ring_sign(population[0].sk, 0, ring, b"m")
        assert not ring_verify(ring, b"m", sig._replace(responses=sig.responses[:2]))

    def test_random_forgeries(self, population: List[Account], trials: Callable[[int, int], int]):
        rnd = random.Random(11)
        ring = Ring.of(m.pk for m in population[:2])
        image = key_image(population[0].sk, population[0].pk)
        for _ in range(trials(1000, 100)):
            forged = LinkableRingSig(image, rnd.randrange(Q), (rnd.randrange(Q), rnd.randrange(Q)))
            assert not ring_verify(ring, b"m", forged)

    def test_signer_not_in_ring(self, population: List[Account]):
        ring = Ring.of(m.pk for m in population[:3])
        with pytest.raises(SignerNotInRing):
            ring_sign(population[5].sk, 0, ring, b"m")
        with pytest.raises(SignerNotInRing):
            ring_sign(population[0].sk, 3, ring, b"m")

    def test_verifier_touches_every_member(self, population: List[Account]):
        ring = Ring.of(m.pk for m in population[:11])
        for index in (0, 5, 10):
            sig = ring_sign(population[index].sk, index, ring, b"m")
            seen: List[Tuple[int, GroupElement]] = []
            assert ring_verify(ring, b"m", sig, trace=lambda j, member: seen.append((j, member)))
            assert seen == list(enumerate(ring.members))

    def test_deterministic_under_seeded_entropy(self, population: List[Account]):
        ring = Ring.of(m.pk for m in population[:4])
        s1 = ring_sign(population[0].sk, 0, ring, b"m", seeded_entropy(1))
        s2 = ring_sign(population[0].sk, 0, ring, b"m", seeded_entropy(1))
        assert s1 == s2


class TestLink(object):
    def test_same_key_across_rings(self, trials: Callable[[int, int], int]):
        rnd = random.Random(5)
        n = trials(1000, 50)
        signers = _accounts(n, "linked-signers")
        decoys = _accounts(8, "linked-decoys")
        for signer in signers:
            ring1 = _ring_with(signer, rnd.sample(decoys, 1), rnd.randrange(2))
            ring2 = _ring_with(signer, rnd.sample(decoys, 2), rnd.randrange(3))
            sig1 = ring_sign(signer.sk, ring1.members.index(signer.pk), ring1, b"first")
            sig2 = ring_sign(signer.sk, ring2.members.index(signer.pk), ring2, b"second")
            assert ring_verify(ring1, b"first", sig1) and ring_verify(ring2, b"second", sig2)
            assert link(sig1, sig2)
            assert sig1.key_image == sig2.key_image

    def test_independent_keys(self, trials: Callable[[int, int], int]):
        n = trials(1000, 50)
        a_keys = _accounts(n, "independent-a")
        b_keys = _accounts(n, "independent-b")
        for a, b in zip(a_keys, b_keys):
            ring = Ring.of([a.pk, b.pk])
            assert not link(ring_sign(a.sk, 0, ring, b"m"), ring_sign(b.sk, 1, ring, b"m"))

    def test_reflexive(self, population: List[Account]):
        ring = Ring.of(m.pk for m in population[:3])
        sig = ring_sign(population[1].sk, 1, ring, b"m")
        assert link(sig, sig)


class TestEncoding(object):
    def test_ring_rules(self, population: List[Account]):
        with pytest.raises(ConfigError):
            Ring.of([])
        with pytest.raises(ConfigError):
            Ring.of([population[0].pk, population[0].pk])

    def test_round_trips(self, population: List[Account]):
        ring = Ring.of(m.pk for m in population[:5])
        sig = ring_sign(population[4].sk, 4, ring, b"m")
        assert Ring.decode(ring.encode()) == ring
        assert Ring.from_json(ring.to_json()) == ring
        assert LinkableRingSig.decode(sig.encode()) == sig
        assert LinkableRingSig.from_json(sig.to_json()) == sig

    def test_truncated(self, population: List[Account]):
        ring = Ring.of(m.pk for m in population[:2])
        sig = ring_sign(population[0].sk, 0, ring, b"m")
        with pytest.raises(MalformedEncoding):
            LinkableRingSig.decode(sig.encode()[:-1])
        with pytest.raises(MalformedEncoding):
            Ring.decode(ring.encode()[:-1])
