from .types import Block, BlockHeader, CerInfo, Genesis, Receipt, RegInfo, Transaction
from .state import ChainState, StateDelta
from .contracts import exec_identity_auth, exec_soul_cert, execute_transaction
from .block import Chain, TxPool, apply_block, build_cert_tx, build_registration_tx, pack_block, replay_chain
from .store import ChainStore
