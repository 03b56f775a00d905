#pragma once

#include <string>
#include <vector>

namespace hdmi::testdata {

// Published (completeness, selectivity, reliability) triples used as
// fixtures for the harmonic-mean arithmetic audit. Values are transcribed
// verbatim, including their 4-decimal rounding.
struct ReferenceRow {
    const char* table;
    const char* task;
    const char* model;
    const char* method;
    double completeness;
    double selectivity;
    double reliability;
};

inline const std::vector<ReferenceRow>& reference_rows() {
    static const std::vector<ReferenceRow> rows = {
        // ---- main results table ----
        {"t1", "agr_sv_num_obj-relc", "llama3-8b", "hdmi", 1.0000, 1.0000, 1.0000},
        {"t1", "agr_sv_num_obj-relc", "llama3-8b", "alterrep", 0.9800, 1.0000, 0.9899},
        {"t1", "agr_sv_num_obj-relc", "llama3-8b", "fgsm", 1.0000, 1.0000, 1.0000},
        {"t1", "agr_sv_num_obj-relc", "llama3-8b", "pgd", 0.6307, 1.0000, 0.7736},
        {"t1", "agr_sv_num_obj-relc", "pythia-70m", "hdmi", 1.0000, 1.0000, 1.0000},
        {"t1", "agr_sv_num_obj-relc", "pythia-70m", "alterrep", 0.9600, 1.0000, 0.9796},
        {"t1", "agr_sv_num_obj-relc", "pythia-70m", "fgsm", 1.0000, 1.0000, 1.0000},
        {"t1", "agr_sv_num_obj-relc", "pythia-70m", "pgd", 1.0000, 1.0000, 1.0000},

        {"t1", "agr_sv_num_pp", "llama3-8b", "hdmi", 1.0000, 0.9362, 0.9671},
        {"t1", "agr_sv_num_pp", "llama3-8b", "alterrep", 0.9500, 0.8680, 0.9072},
        {"t1", "agr_sv_num_pp", "llama3-8b", "fgsm", 1.0000, 0.8314, 0.9080},
        {"t1", "agr_sv_num_pp", "llama3-8b", "pgd", 0.3650, 0.3648, 0.3649},
        {"t1", "agr_sv_num_pp", "pythia-70m", "hdmi", 0.9984, 0.9409, 0.9688},
        {"t1", "agr_sv_num_pp", "pythia-70m", "alterrep", 0.5000, 0.5108, 0.5053},
        {"t1", "agr_sv_num_pp", "pythia-70m", "fgsm", 0.9984, 0.4906, 0.6579},
        {"t1", "agr_sv_num_pp", "pythia-70m", "pgd", 1.0000, 0.8550, 0.9218},

        {"t1", "agr_refl_num_subj-relc", "llama3-8b", "hdmi", 1.0000, 1.0000, 1.0000},
        {"t1", "agr_refl_num_subj-relc", "llama3-8b", "alterrep", 0.9898, 1.0000, 0.9949},
        {"t1", "agr_refl_num_subj-relc", "llama3-8b", "fgsm", 1.0000, 1.0000, 1.0000},
        {"t1", "agr_refl_num_subj-relc", "llama3-8b", "pgd", 0.9636, 1.0000, 0.9815},
        {"t1", "agr_refl_num_subj-relc", "pythia-70m", "hdmi", 1.0000, 1.0000, 1.0000},
        {"t1", "agr_refl_num_subj-relc", "pythia-70m", "alterrep", 0.5000, 1.0000, 0.6667},
        {"t1", "agr_refl_num_subj-relc", "pythia-70m", "fgsm", 0.4963, 1.0000, 0.6634},
        {"t1", "agr_refl_num_subj-relc", "pythia-70m", "pgd", 0.4912, 1.0000, 0.6588},

        {"t1", "agr_refl_num_pp", "llama3-8b", "hdmi", 0.9902, 0.8272, 0.9014},
        {"t1", "agr_refl_num_pp", "llama3-8b", "alterrep", 0.9900, 0.6540, 0.7877},
        {"t1", "agr_refl_num_pp", "llama3-8b", "fgsm", 0.5341, 0.9881, 0.6934},
        {"t1", "agr_refl_num_pp", "llama3-8b", "pgd", 0.3335, 0.5155, 0.4050},
        {"t1", "agr_refl_num_pp", "pythia-70m", "hdmi", 1.0000, 0.8983, 0.9464},
        {"t1", "agr_refl_num_pp", "pythia-70m", "alterrep", 0.5449, 0.8843, 0.6743},
        {"t1", "agr_refl_num_pp", "pythia-70m", "fgsm", 0.9642, 0.9206, 0.9419},
        {"t1", "agr_refl_num_pp", "pythia-70m", "pgd", 0.6142, 1.0000, 0.7610},

        {"t1", "gss_subord_subj-relc", "llama3-8b", "hdmi", 1.0000, 0.8969, 0.9456},
        {"t1", "gss_subord_subj-relc", "llama3-8b", "alterrep", 0.9700, 0.8938, 0.9303},
        {"t1", "gss_subord_subj-relc", "llama3-8b", "fgsm", 0.5500, 1.0000, 0.7097},
        {"t1", "gss_subord_subj-relc", "llama3-8b", "pgd", 0.6411, 1.0000, 0.7813},
        {"t1", "gss_subord_subj-relc", "pythia-70m", "hdmi", 1.0000, 1.0000, 1.0000},
        {"t1", "gss_subord_subj-relc", "pythia-70m", "alterrep", 0.6095, 1.0000, 0.7573},
        {"t1", "gss_subord_subj-relc", "pythia-70m", "fgsm", 0.1507, 1.0000, 0.2619},
        {"t1", "gss_subord_subj-relc", "pythia-70m", "pgd", 0.3463, 1.0000, 0.5145},

        {"t1", "gss_subord_pp", "llama3-8b", "hdmi", 1.0000, 0.8969, 0.9456},
        {"t1", "gss_subord_pp", "llama3-8b", "alterrep", 0.9700, 0.8938, 0.9303},
        {"t1", "gss_subord_pp", "llama3-8b", "fgsm", 1.0000, 0.9382, 0.9681},
        {"t1", "gss_subord_pp", "llama3-8b", "pgd", 0.9950, 0.5298, 0.6914},
        {"t1", "gss_subord_pp", "pythia-70m", "hdmi", 0.9984, 0.7371, 0.8481},
        {"t1", "gss_subord_pp", "pythia-70m", "alterrep", 0.6896, 0.7051, 0.6972},
        {"t1", "gss_subord_pp", "pythia-70m", "fgsm", 0.1333, 0.9799, 0.2347},
        {"t1", "gss_subord_pp", "pythia-70m", "pgd", 0.3015, 0.6628, 0.4144},

        {"t1", "cleft", "llama3-8b", "hdmi", 1.0000, 0.9800, 0.9899},
        {"t1", "cleft", "llama3-8b", "alterrep", 0.8603, 0.9800, 0.9163},
        {"t1", "cleft", "llama3-8b", "fgsm", 1.0000, 1.0000, 1.0000},
        {"t1", "cleft", "llama3-8b", "pgd", 0.9946, 1.0000, 0.9973},
        {"t1", "cleft", "pythia-70m", "hdmi", 1.0000, 1.0000, 1.0000},
        {"t1", "cleft", "pythia-70m", "alterrep", 0.7300, 1.0000, 0.8440},
        {"t1", "cleft", "pythia-70m", "fgsm", 0.7900, 1.0000, 0.8827},
        {"t1", "cleft", "pythia-70m", "pgd", 0.9599, 1.0000, 0.9796},

        {"t1", "filler_gap_hierarchy", "llama3-8b", "hdmi", 1.0000, 0.8414, 0.9138},
        {"t1", "filler_gap_hierarchy", "llama3-8b", "alterrep", 0.9900, 0.8443, 0.9114},
        {"t1", "filler_gap_hierarchy", "llama3-8b", "fgsm", 1.0000, 1.0000, 1.0000},
        {"t1", "filler_gap_hierarchy", "llama3-8b", "pgd", 0.8300, 1.0000, 0.9071},
        {"t1", "filler_gap_hierarchy", "pythia-70m", "hdmi", 1.0000, 1.0000, 1.0000},
        {"t1", "filler_gap_hierarchy", "pythia-70m", "alterrep", 0.8299, 1.0000, 0.9070},
        {"t1", "filler_gap_hierarchy", "pythia-70m", "fgsm", 1.0000, 1.0000, 1.0000},
        {"t1", "filler_gap_hierarchy", "pythia-70m", "pgd", 1.0000, 1.0000, 1.0000},

        {"t1", "filler_gap_pp", "llama3-8b", "hdmi", 0.9710, 0.4412, 0.6067},
        {"t1", "filler_gap_pp", "llama3-8b", "alterrep", 0.8095, 0.7389, 0.7726},
        {"t1", "filler_gap_pp", "llama3-8b", "fgsm", 0.9764, 0.0501, 0.0954},
        {"t1", "filler_gap_pp", "llama3-8b", "pgd", 0.8480, 0.2290, 0.3606},
        {"t1", "filler_gap_pp", "pythia-70m", "hdmi", 0.7404, 0.6275, 0.6793},
        {"t1", "filler_gap_pp", "pythia-70m", "alterrep", 0.5100, 0.4582, 0.4782},
        {"t1", "filler_gap_pp", "pythia-70m", "fgsm", 0.4453, 0.9951, 0.6153},
        {"t1", "filler_gap_pp", "pythia-70m", "pgd", 0.4561, 0.9310, 0.6122},

        {"t1", "filler_gap_subj", "llama3-8b", "hdmi", 1.0000, 0.4651, 0.6349},
        {"t1", "filler_gap_subj", "llama3-8b", "alterrep", 1.0000, 0.5200, 0.6842},
        {"t1", "filler_gap_subj", "llama3-8b", "fgsm", 0.9200, 1.0000, 0.9583},
        {"t1", "filler_gap_subj", "llama3-8b", "pgd", 0.9050, 1.0000, 0.9501},
        {"t1", "filler_gap_subj", "pythia-70m", "hdmi", 1.0000, 1.0000, 1.0000},
        {"t1", "filler_gap_subj", "pythia-70m", "alterrep", 1.0000, 0.5200, 0.6842},
        {"t1", "filler_gap_subj", "pythia-70m", "fgsm", 0.3435, 1.0000, 0.5114},
        {"t1", "filler_gap_subj", "pythia-70m", "pgd", 0.1787, 1.0000, 0.3033},

        {"t1", "LGD", "llama3-8b", "hdmi", 0.9412, 0.8117, 0.8716},
        {"t1", "LGD", "llama3-8b", "alterrep", 0.9490, 0.6536, 0.7741},
        {"t1", "LGD", "llama3-8b", "fgsm", 0.5813, 0.3337, 0.4240},
        {"t1", "LGD", "llama3-8b", "pgd", 0.5402, 0.4149, 0.4694},
        {"t1", "LGD", "pythia-70m", "hdmi", 0.9341, 0.8538, 0.8921},
        {"t1", "LGD", "pythia-70m", "alterrep", 0.9951, 0.3234, 0.4881},
        {"t1", "LGD", "pythia-70m", "fgsm", 0.4393, 0.9959, 0.6097},
        {"t1", "LGD", "pythia-70m", "pgd", 0.7124, 0.5320, 0.6091},

        // ---- supplementary results table ----
        {"t2", "agr_sv_num_obj-relc", "llama3-8b", "hdmi", 1.0000, 1.0000, 1.0000},
        {"t2", "agr_sv_num_obj-relc", "llama3-8b", "alterrep", 0.9800, 1.0000, 0.9899},
        {"t2", "agr_sv_num_obj-relc", "llama3-8b", "fgsm", 1.0000, 1.0000, 1.0000},
        {"t2", "agr_sv_num_obj-relc", "llama3-8b", "pgd", 0.6307, 1.0000, 0.7736},
        {"t2", "agr_sv_num_obj-relc", "pythia-70m", "hdmi", 1.0000, 1.0000, 1.0000},
        {"t2", "agr_sv_num_obj-relc", "pythia-70m", "alterrep", 0.9600, 1.0000, 0.9796},
        {"t2", "agr_sv_num_obj-relc", "pythia-70m", "fgsm", 1.0000, 1.0000, 1.0000},
        {"t2", "agr_sv_num_obj-relc", "pythia-70m", "pgd", 1.0000, 1.0000, 1.0000},

        {"t2", "agr_gender", "llama3-8b", "hdmi", 1.0000, 1.0000, 1.0000},
        {"t2", "agr_gender", "llama3-8b", "alterrep", 1.0000, 1.0000, 1.0000},
        {"t2", "agr_gender", "llama3-8b", "fgsm", 1.0000, 1.0000, 1.0000},
        {"t2", "agr_gender", "llama3-8b", "pgd", 0.9350, 1.0000, 0.9664},
        {"t2", "agr_gender", "pythia-70m", "hdmi", 1.0000, 1.0000, 1.0000},
        {"t2", "agr_gender", "pythia-70m", "alterrep", 0.5000, 1.0000, 0.6667},
        {"t2", "agr_gender", "pythia-70m", "fgsm", 1.0000, 1.0000, 1.0000},
        {"t2", "agr_gender", "pythia-70m", "pgd", 1.0000, 1.0000, 1.0000},

        {"t2", "npi_any_subj-relc", "llama3-8b", "hdmi", 1.0000, 1.0000, 1.0000},
        {"t2", "npi_any_subj-relc", "llama3-8b", "alterrep", 1.0000, 1.0000, 1.0000},
        {"t2", "npi_any_subj-relc", "llama3-8b", "fgsm", 1.0000, 1.0000, 1.0000},
        {"t2", "npi_any_subj-relc", "llama3-8b", "pgd", 0.9600, 1.0000, 0.9796},
        {"t2", "npi_any_subj-relc", "pythia-70m", "hdmi", 1.0000, 1.0000, 1.0000},
        {"t2", "npi_any_subj-relc", "pythia-70m", "alterrep", 0.5000, 1.0000, 0.6667},
        {"t2", "npi_any_subj-relc", "pythia-70m", "fgsm", 0.5000, 1.0000, 0.6667},
        {"t2", "npi_any_subj-relc", "pythia-70m", "pgd", 0.4999, 1.0000, 0.6666},

        {"t2", "cleft", "llama3-8b", "hdmi", 1.0000, 0.9800, 0.9899},
        {"t2", "cleft", "llama3-8b", "alterrep", 0.8603, 0.9800, 0.9163},
        {"t2", "cleft", "llama3-8b", "fgsm", 1.0000, 1.0000, 1.0000},
        {"t2", "cleft", "llama3-8b", "pgd", 0.9946, 1.0000, 0.9973},
        {"t2", "cleft", "pythia-70m", "hdmi", 1.0000, 1.0000, 1.0000},
        {"t2", "cleft", "pythia-70m", "alterrep", 0.7300, 1.0000, 0.8440},
        {"t2", "cleft", "pythia-70m", "fgsm", 0.7900, 1.0000, 0.8827},
        {"t2", "cleft", "pythia-70m", "pgd", 0.9599, 1.0000, 0.9796},

        {"t2", "filler_gap_hierarchy", "llama3-8b", "hdmi", 1.0000, 0.8414, 0.9138},
        {"t2", "filler_gap_hierarchy", "llama3-8b", "alterrep", 0.9900, 0.8443, 0.9114},
        {"t2", "filler_gap_hierarchy", "llama3-8b", "fgsm", 1.0000, 1.0000, 1.0000},
        {"t2", "filler_gap_hierarchy", "llama3-8b", "pgd", 0.8300, 1.0000, 0.9071},
        {"t2", "filler_gap_hierarchy", "pythia-70m", "hdmi", 1.0000, 1.0000, 1.0000},
        {"t2", "filler_gap_hierarchy", "pythia-70m", "alterrep", 0.8299, 1.0000, 0.9070},
        {"t2", "filler_gap_hierarchy", "pythia-70m", "fgsm", 1.0000, 1.0000, 1.0000},
        {"t2", "filler_gap_hierarchy", "pythia-70m", "pgd", 1.0000, 1.0000, 1.0000},

        {"t2", "LGD", "llama3-8b", "hdmi", 0.9412, 0.8117, 0.8716},
        {"t2", "LGD", "llama3-8b", "alterrep", 0.9490, 0.6536, 0.7741},
        {"t2", "LGD", "llama3-8b", "fgsm", 0.5813, 0.3337, 0.4240},
        {"t2", "LGD", "llama3-8b", "pgd", 0.5402, 0.4149, 0.4694},
        {"t2", "LGD", "pythia-70m", "hdmi", 0.9341, 0.8538, 0.8921},
        {"t2", "LGD", "pythia-70m", "alterrep", 0.9951, 0.3234, 0.4881},
        {"t2", "LGD", "pythia-70m", "fgsm", 0.4393, 0.9959, 0.6097},
        {"t2", "LGD", "pythia-70m", "pgd", 0.5402, 0.4149, 0.4694},

        // ---- objective ablation table (LGD, llama3-8b) ----
        {"t3", "LGD", "llama3-8b", "target_only", 0.7407, 0.8145, 0.7758},
        {"t3", "LGD", "llama3-8b", "hdmi", 0.9412, 0.8117, 0.8716},
    };
    return rows;
}

}  // namespace hdmi::testdata
