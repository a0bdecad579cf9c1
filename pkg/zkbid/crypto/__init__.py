from .primitives import (GroupElement, Scalar, Digest32, EntropySource, Q, digest, hash_to_point, hash_to_scalar,
                         random_scalar, to_hex, from_hex)
from .accounts import (Account, AccountSignature, account_sign, account_verify, derive_address, generate_account,
                       seeded_entropy)
from .lrs import Ring, LinkableRingSig, key_image, link, ring_sign, ring_verify
