"""Contains constants shared across the ZKBID modules."""
from typing import NewType

# Stronger typing for integers and byte strings.
Address = NewType("Address", bytes)  # 20 bytes.
Height = NewType("Height", int)
NodeIndex = NewType("NodeIndex", int)
SimTime = NewType("SimTime", int)  # Simulated milliseconds.

ADDRESS_LEN = 20
DIGEST_LEN = 32

FEATURE_DIM = 128
FEATURE_SCALE_BITS = 16  # Coordinate value = integer / 2^16.
SIMILARITY_SCALE_BITS = 32  # Similarity value = integer / 2^32.
EPS_NORM = 1 << 20
DEFAULT_THRESHOLD = 0.90

DEFAULT_RING_SIZE = 11
DEFAULT_BLOCK_CAPACITY = 50
DEFAULT_NODES = 6

# Domain-separation tags.
TAG_SIGNATURE = b"ZKBID/SIG/v1"
TAG_RING = b"ZKBID/LRS/v1"
TAG_FIAT_SHAMIR = b"ZKBID/FS/v1"
TAG_HASH_TO_POINT = b"ZKBID/H2P/v1"
TAG_IDENTITY = b"ZKBID/ID/v1"
TAG_NONCE = b"ZKBID/NONCE/v1"

# On-chain contract identifiers, used as transaction recipients.
IDENTITY_AUTH_CONTRACT = Address(bytes(19) + b"\x01")
SOUL_CERT_CONTRACT = Address(bytes(19) + b"\x02")

GENESIS_HEIGHT = Height(0)
