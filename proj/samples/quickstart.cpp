// Train a WM model on synthetic data and compare it with Cox on the same split.
//
//   ./build/samples/quickstart

#include <iostream>

#include "censrank/censrank.hpp"

using namespace censrank;

int main() {
    const auto syn = generate_synthetic({.n = 3000, .num_features = 8, .censor_fraction = 0.4, .seed = 1});
    const ExperimentData data{"synthetic", syn.dataset, 10.0};
    const auto split = kfold_split(data.size(), 5, 0.2, 1)[0];
    const auto fold = materialize_fold(data, split);

    const auto km = kaplan_meier(fold.train);
    std::cout << "train " << fold.train.size() << " rows, " << fold.train.grid.num_bins() << " bins, KM at last bin "
              << km.survival.back() << "\n";

    for (auto loss : {LossKind::wm, LossKind::cox_efron, LossKind::rank_sigmoid}) {
        TrainRun run;
        run.loss.kind = loss;
        run.hidden_dims = {64, 64};
        run.max_epochs = 100;
        run.seed = 7;
        const auto result = train_model(run, fold.train, fold.val);
        const auto scores = evaluation_scores(result.network, loss, feature_matrix(fold.test));
        std::cout << to_string(loss) << ": best epoch " << result.best_epoch << ", val C " << result.best_val_cindex
                  << ", test C " << c_index(fold.test, scores) << "\n";
    }
}
