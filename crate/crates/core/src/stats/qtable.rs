//! Upper quantiles of the studentized range, columns p = 2..=10.

pub(super) const DF: [f64; 25] = [
    1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0, 10.0, 11.0, 12.0, 13.0, 14.0, 15.0, 16.0, 17.0, 18.0, 19.0, 20.0,
    24.0, 30.0, 40.0, 60.0, 120.0,
];

pub(super) const Q_05: [[f64; 9]; 26] = [
    [17.9693, 26.9755, 32.8187, 37.0815, 40.4076, 43.1186, 45.3973, 47.3566, 49.0710], // f = 1
    [6.0849, 8.3308, 9.7980, 10.8811, 11.7343, 12.4349, 13.0273, 13.5390, 13.9885],    // f = 2
    [4.5007, 5.9096, 6.8245, 7.5017, 8.0371, 8.4783, 8.8525, 9.1766, 9.4620],          // f = 3
    [3.9265, 5.0402, 5.7571, 6.2870, 6.7064, 7.0526, 7.3465, 7.6015, 7.8263],          // f = 4
    [3.6354, 4.6017, 5.2183, 5.6731, 6.0329, 6.3299, 6.5823, 6.8014, 6.9947],          // f = 5
    [3.4605, 4.3392, 4.8956, 5.3049, 5.6284, 5.8953, 6.1222, 6.3192, 6.4931],          // f = 6
    [3.3441, 4.1649, 4.6813, 5.0601, 5.3591, 5.6057, 5.8153, 5.9973, 6.1579],          // f = 7
    [3.2612, 4.0410, 4.5288, 4.8858, 5.1672, 5.3991, 5.5962, 5.7673, 5.9183],          // f = 8
    [3.1992, 3.9485, 4.4149, 4.7554, 5.0235, 5.2444, 5.4319, 5.5947, 5.7384],          // f = 9
    [3.1511, 3.8768, 4.3266, 4.6543, 4.9120, 5.1242, 5.3042, 5.4605, 5.5984],          // f = 10
    [3.1127, 3.8196, 4.2561, 4.5736, 4.8230, 5.0281, 5.2021, 5.3531, 5.4863],          // f = 11
    [3.0813, 3.7729, 4.1987, 4.5077, 4.7502, 4.9496, 5.1187, 5.2653, 5.3946],          // f = 12
    [3.0552, 3.7341, 4.1509, 4.4529, 4.6897, 4.8842, 5.0491, 5.1921, 5.3181],          // f = 13
    [3.0332, 3.7014, 4.1105, 4.4066, 4.6385, 4.8290, 4.9903, 5.1301, 5.2534],          // f = 14
    [3.0143, 3.6734, 4.0760, 4.3670, 4.5947, 4.7816, 4.9399, 5.0770, 5.1979],          // f = 15
    [2.9980, 3.6491, 4.0461, 4.3327, 4.5568, 4.7406, 4.8962, 5.0310, 5.1498],          // f = 16
    [2.9837, 3.6280, 4.0200, 4.3027, 4.5237, 4.7048, 4.8580, 4.9907, 5.1077],          // f = 17
    [2.9712, 3.6093, 3.9970, 4.2763, 4.4944, 4.6731, 4.8243, 4.9552, 5.0705],          // f = 18
    [2.9600, 3.5927, 3.9766, 4.2528, 4.4685, 4.6450, 4.7944, 4.9236, 5.0375],          // f = 19
    [2.9500, 3.5779, 3.9583, 4.2319, 4.4452, 4.6199, 4.7676, 4.8954, 5.0079],          // f = 20
    [2.9188, 3.5317, 3.9013, 4.1663, 4.3727, 4.5413, 4.6838, 4.8069, 4.9152],          // f = 24
    [2.8882, 3.4864, 3.8454, 4.1021, 4.3015, 4.4642, 4.6014, 4.7199, 4.8241],          // f = 30
    [2.8582, 3.4421, 3.7907, 4.0391, 4.2316, 4.3885, 4.5205, 4.6345, 4.7345],          // f = 40
    [2.8288, 3.3987, 3.7371, 3.9774, 4.1632, 4.3141, 4.4411, 4.5504, 4.6463],          // f = 60
    [2.8000, 3.3561, 3.6846, 3.9169, 4.0960, 4.2412, 4.3630, 4.4678, 4.5595],          // f = 120
    [2.7718, 3.3145, 3.6332, 3.8577, 4.0301, 4.1696, 4.2863, 4.3865, 4.4741],          // f = inf
];
pub(super) const Q_01: [[f64; 9]; 26] = [
    [90.0242, 135.0407, 164.2577, 185.5753, 202.2097, 215.7691, 227.1663, 236.9662, 245.5416], // f = 1
    [14.0358, 19.0189, 22.2937, 24.7172, 26.6290, 28.2006, 29.5301, 30.6794, 31.6894],         // f = 2
    [8.2603, 10.6185, 12.1695, 13.3243, 14.2407, 14.9978, 15.6410, 16.1990, 16.6908],          // f = 3
    [6.5112, 8.1198, 9.1729, 9.9583, 10.5832, 11.1009, 11.5418, 11.9251, 12.2637],             // f = 4
    [5.7023, 6.9757, 7.8042, 8.4215, 8.9131, 9.3209, 9.6687, 9.9715, 10.2393],                 // f = 5
    [5.2431, 6.3305, 7.0333, 7.5560, 7.9723, 8.3177, 8.6125, 8.8693, 9.0966],                  // f = 6
    [4.9490, 5.9193, 6.5424, 7.0050, 7.3730, 7.6784, 7.9390, 8.1662, 8.3674],                  // f = 7
    [4.7452, 5.6354, 6.2038, 6.6248, 6.9594, 7.2369, 7.4738, 7.6803, 7.8632],                  // f = 8
    [4.5960, 5.4280, 5.9567, 6.3473, 6.6574, 6.9145, 7.1339, 7.3251, 7.4945],                  // f = 9
    [4.4820, 5.2702, 5.7686, 6.1361, 6.4275, 6.6690, 6.8749, 7.0544, 7.2133],                  // f = 10
    [4.3923, 5.1460, 5.6208, 5.9701, 6.2468, 6.4759, 6.6713, 6.8414, 6.9921],                  // f = 11
    [4.3198, 5.0459, 5.5016, 5.8363, 6.1011, 6.3202, 6.5069, 6.6696, 6.8136],                  // f = 12
    [4.2600, 4.9635, 5.4036, 5.7262, 5.9812, 6.1920, 6.3717, 6.5280, 6.6664],                  // f = 13
    [4.2099, 4.8945, 5.3215, 5.6340, 5.8808, 6.0847, 6.2583, 6.4095, 6.5432],                  // f = 14
    [4.1673, 4.8359, 5.2518, 5.5558, 5.7956, 5.9936, 6.1621, 6.3087, 6.4384],                  // f = 15
    [4.1306, 4.7855, 5.1919, 5.4885, 5.7223, 5.9152, 6.0793, 6.2221, 6.3483],                  // f = 16
    [4.0987, 4.7418, 5.1399, 5.4301, 5.6586, 5.8471, 6.0074, 6.1468, 6.2700],                  // f = 17
    [4.0707, 4.7034, 5.0942, 5.3788, 5.6028, 5.7874, 5.9443, 6.0807, 6.2013],                  // f = 18
    [4.0460, 4.6694, 5.0539, 5.3336, 5.5535, 5.7346, 5.8886, 6.0223, 6.1406],                  // f = 19
    [4.0239, 4.6392, 5.0180, 5.2933, 5.5095, 5.6876, 5.8389, 5.9703, 6.0865],                  // f = 20
    [3.9555, 4.5456, 4.9068, 5.1684, 5.3735, 5.5420, 5.6850, 5.8092, 5.9187],                  // f = 24
    [3.8891, 4.4549, 4.7992, 5.0476, 5.2418, 5.4012, 5.5361, 5.6531, 5.7563],                  // f = 30
    [3.8247, 4.3672, 4.6951, 4.9308, 5.1145, 5.2648, 5.3920, 5.5020, 5.5989],                  // f = 40
    [3.7622, 4.2822, 4.5944, 4.8178, 4.9913, 5.1330, 5.2525, 5.3558, 5.4466],                  // f = 60
    [3.7016, 4.1999, 4.4970, 4.7085, 4.8722, 5.0055, 5.1176, 5.2143, 5.2992],                  // f = 120
    [3.6428, 4.1203, 4.4028, 4.6028, 4.7570, 4.8822, 4.9872, 5.0775, 5.1566],                  // f = inf
];
