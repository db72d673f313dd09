//! Worked vectors shared by the golden checks and the tests.

/// Plaintext of the worked pipeline example.
pub const WORKED_PLAINTEXT: [u64; 8] = [398, 453, 876, 200, 356, 165, 265, 897];
/// Its RSA layer under `(p, q, e) = (13, 37, 5)`.
pub const WORKED_CIPHERTEXT: [u64; 8] = [151, 293, 252, 135, 304, 315, 265, 182];
pub const WORKED_PRIMES: (u64, u64) = (13, 37);
pub const WORKED_EXPONENT: u64 = 5;
pub const WORKED_MODULI: [u64; 3] = [107, 109, 113];
pub const WORKED_KERNEL: [i64; 3] = [2, 0, 0];
/// Printed level-1 detail sequences per modulus (signed representatives).
pub const WORKED_LEVEL1_DETAILS: [[i64; 4]; 3] =
    [[-9, -48, -79, -27], [-9, -42, -75, -21], [-9, -30, -67, -9]];

/// Sixteen-integer behavioural-simulation array and its moduli.
pub const SIMULATION_ARRAY: [u64; 16] = [
    39_870, 45_378, 87_654, 20_087, 35_689, 16_592, 564, 276_509, 89_732, 56_287, 4527, 89_065,
    4321, 7654, 5489, 512,
];
pub const SIMULATION_MODULI: [u64; 3] = [111, 115, 119];

/// Zero-terminated message of the (4,2,3) trellis example.
pub const CODE_MESSAGE: &str = "10110000";
pub const CODE_STAGE1_OUTPUT: &str = "10010111";
pub const CODE_SBOX_OUTPUT: &str = "00111101";
pub const CODE_PBOX_OUTPUT: &str = "00111110";
pub const CODE_CODEWORD: &str = "0000111101011001";
/// The codeword with its first bit flipped.
pub const CODE_RECEIVED: &str = "1000111101011001";

pub const CODE_STAGE1_TABLE: &str = include_str!("../fixtures/code_stage1.tbl");
pub const CODE_STAGE2_TABLE: &str = include_str!("../fixtures/code_stage2.tbl");

/// Transfer-function coefficients `a_d` of the (2,2,2) and (4,4,2) codes.
pub const PROFILE_222: [(u32, f64); 2] = [(3, 1.0), (4, 2.0)];
pub const PROFILE_442: [(u32, f64); 9] = [
    (3, 1.0),
    (4, 2.0),
    (5, 3.0),
    (6, 5.0),
    (7, 9.0),
    (8, 16.0),
    (9, 28.0),
    (10, 49.0),
    (11, 85.0),
];
