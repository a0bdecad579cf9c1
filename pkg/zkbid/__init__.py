"""
ZKBID: identity authentication and accountably anonymous account certification on a simulated blockchain.

Sub-packages: `crypto` (group, accounts, ring signatures), `zk` (face-match circuit and proving backends), `chain`
(contracts, blocks, persistence), `net` (network simulation and benchmark), `wallet` (user-side flows).
"""
