from .store import WalletStore
from .endpoint import ChainEndpoint, LocalChainEndpoint, SimulationEndpoint
from .flows import IdentityInput, certify_soul, enroll, identity_hash, register, sample_ring, status
