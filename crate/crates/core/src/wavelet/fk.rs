//! Fejér–Korovkin scaling filters (analysis lowpass, minimum phase).
//!
//! Each table is an orthonormal quadrature mirror filter: the taps sum to
//! sqrt(2), have unit energy and are orthogonal to their even shifts.

pub const FK4: [f64; 4] = [
    0.653927551502433,
    0.7532724962889091,
    0.05317922968411453,
    -0.04616571510236161,
];

pub const FK6: [f64; 6] = [
    0.4279150202839754,
    0.8129196443541133,
    0.35636952280358636,
    -0.14643867874320485,
    -0.07717776190101418,
    0.04062581557563907,
];

pub const FK8: [f64; 8] = [
    0.4361006788598359,
    0.8012834438474142,
    0.3662497212204326,
    -0.14048213402279836,
    -0.10525474197881271,
    0.05175405214452587,
    0.010011123085091791,
    -0.005448580782594181,
];

pub const FK14: [f64; 14] = [
    0.2603717693037009,
    0.686891477246636,
    0.6115546539472099,
    0.05142165412892757,
    -0.2456139281610015,
    -0.048575339077288754,
    0.12428256092000188,
    0.02222673961876614,
    -0.06399737303879399,
    -0.005074372547497621,
    0.029779711589290988,
    -0.0032974791532950297,
    -0.009270613373860545,
    0.0035141009702991523,
];

pub const FK18: [f64; 18] = [
    0.2214447453136865,
    0.6335505315898576,
    0.6509884058593036,
    0.14235543914121906,
    -0.24619635447999066,
    -0.11362823254865634,
    0.12784674502791393,
    0.0707063769819612,
    -0.07523961207296667,
    -0.03972596505712651,
    0.045936081238799366,
    0.018696757224015512,
    -0.02663246557833437,
    -0.006157985650627823,
    0.013639364044389375,
    -0.0003259844215095766,
    -0.004680128166253553,
    0.0016358439274143924,
];

pub const FK22: [f64; 22] = [
    0.19386516038401566,
    0.5894199972929273,
    0.6701042815800261,
    0.21568306987597302,
    -0.22801125446114742,
    -0.16449345969729937,
    0.11153282827798318,
    0.11017180041736682,
    -0.06607291938519254,
    -0.07185235870063694,
    0.04353462580665631,
    0.04478275614905043,
    -0.029738529462038643,
    -0.025975825758852378,
    0.020282054883467883,
    0.012967848757714827,
    -0.0128854633714601,
    -0.00484024420542278,
    0.007173697062266775,
    0.0003624791174738726,
    -0.002677700128029685,
    0.0008807179382527598,
];
