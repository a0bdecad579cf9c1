from .r1cs import R1CS, ConstraintSystem
from .qap import QAP, r1cs_to_qap
from .circuit import (FaceMatchCircuit, PublicInputs, Witness, build_facematch_circuit, default_circuit,
                      seed_key_digest, synthesize_witness)
from .backend import (KeyPair, ProvingBackend, Groth16Backend, TransparentBackend, select_backend, verify_proof)
