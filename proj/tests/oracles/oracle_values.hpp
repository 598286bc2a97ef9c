// Generated by generate_oracles.py (mpmath, 50 digits). Do not edit.
#pragma once

namespace oracle {

inline constexpr double kEigenRowW1[] = {
    6.6286596644247953e-1,
    4.6871701988925173e-1,
    -2.3435850994462586e-1,
    -4.7838230520275874e-1,
    3.3826737200852332e-2,
    4.3857509500323214e-1,
    9.5726279560480914e-2,
    -3.8045771385465856e-1,
    -1.8465816372012983e-1,
};
inline constexpr double kEigenRowW3[] = {
    6.9394519847617599e-1,
    6.457887736525003e-1,
    -6.5740444184091219e-2,
    -5.6260567800124979e-1,
    -2.0484889413370119e-1,
    4.1795597859460584e-1,
    3.4578953411216706e-1,
    -2.6532556514107728e-1,
    -4.107535114585038e-1,
};
inline constexpr double kEigen60At7 = -1.8603400426660412e-1;
inline constexpr double kEigen150AtM12 = 3.0817946631958243e-1;

inline constexpr double kBandValueRe = 1.9047136623952174e-1;
inline constexpr double kBandValueIm = 5.8660090681405623e-1;
inline constexpr double kBandDerivRe = -1.0511004449822208;
inline constexpr double kBandDerivIm = 3.7993456274178712e-1;
inline constexpr double kFullValueRe = 6.3465063323505695e-2;
inline constexpr double kFullValueIm = 3.6951690014506279e-2;

inline constexpr double kPsiFullRe = 2.474469177001102e-4;
inline constexpr double kPsiFullIm = 4.7095209765406314e-2;
inline constexpr double kVelFullX = 3.0520349265882101;
inline constexpr double kVelFullY = 2.2132838648612259;
inline constexpr double kVelTruncX = 2.8026044164189861e-2;
inline constexpr double kVelTruncY = 5.3815786468370374e-1;
inline constexpr double kVelMixedX = -5.9959485016287357e-1;
inline constexpr double kVelMixedY = 1.7961393150060986;

inline constexpr double kCoverage25[] = {
    5.1699974835848338e-2,
    2.5298532330929825e-1,
    9.8798464744691335e-1,
};
inline constexpr double kOverlapFull25 = 3.726653172078671e-6;
inline constexpr double kOverlapNf12[] = {
    4.730588789443015e-3,
    4.8845619183786842e-4,
    1.1109548146706272e-2,
    1.3533528329173548e-1,
};
inline constexpr double kNormSquaredNf2 = 3.4329535975736975e-3;

inline constexpr double kFullNodeT1X = 1.0672317538243715e-1;
inline constexpr double kFullNodeT1Y = -2.728897661609531e-1;
inline constexpr double kNf2NodesT137[] = {
    2.4843180888479838,
    -5.9898395482631076,
    1.7521841747169255,
    -4.157873744416557e-1,
    -1.7521841747169255,
    4.157873744416557e-1,
    -2.4843180888479838,
    5.9898395482631076,
};

}  // namespace oracle
