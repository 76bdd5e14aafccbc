// Renders one synthetic sequence per action and classifies it with the
// built-in rules. Prints the per-interval labels next to the truth.
//
//   demo_classify_synth [seconds]

#include "silhar/silhar.hpp"

#include <cstdlib>
#include <iomanip>
#include <iostream>

int main(int argc, char** argv)
{
    using namespace silhar;
    const double seconds = argc > 1 ? std::atof(argv[1]) : 2.0;
    const Config cfg;
    const KnowledgeBase& kb = default_kb();

    int correct = 0;
    for (std::size_t a = 0; a < synth::kActions.size(); ++a) {
        synth::FigureParams fig;
        fig.seed = synth::sequence_seed(7, a, 0);
        const auto seq = synth::generate_action(synth::kActions[a], fig, cfg.fps, seconds);
        const auto feats = extract_features(seq.masks, cfg);
        const auto res = classify_rows(feats.rows, kb, cfg);

        const auto truth = eval::canonical_label(seq.action);
        correct += int(res.label == truth.action);
        std::cout << std::left << std::setw(10) << seq.action << " -> " << std::setw(10) << res.label
                  << " md " << std::setw(3) << res.md << " |";
        for (const auto& ir : res.intervals)
            std::cout << ' ' << ir.result.label(kb);
        std::cout << '\n';
    }
    std::cout << correct << '/' << synth::kActions.size() << " correct\n";
}
