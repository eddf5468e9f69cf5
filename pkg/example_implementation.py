""" BASIC USER IMPLEMENTATION """
from hbnpuf import hbnpuf
from hbnpuf.harness import QueryProtocol

def main():
    """ This script gives a brief overview of some of the methods
        available and how to use our library.
    """
    def cell_callback(**kwargs):
        """ Basic signal callback, sent once per collected cell.
            Kwargs will be passed information about the signal.
            kwargs['signal'] = name of signal that called this function.
            kwargs['data'] = (temperature index, chip id, challenge index).
        """
        _, chip_id, c_index = kwargs['data']
        if c_index % 100 == 0:
            print("Chip {} challenge {} collected".format(chip_id, c_index))

    def campaign_callback(data):
        """ Prints the dataset shape once a campaign is done.

            The callback arg must be named 'data' or you can grab the data from the kwargs.
        """
        print("Campaign finished: {}".format(data.responses.shape))

    lab = hbnpuf.PufLab.generate(8, seed=7,
                                 config={'m_stages': 16},
                                 callbacks=[{'function': cell_callback, 'signal': 'cell'}],
                                 **{'mode': 'INFO'})

    lab.set_callbacks([{'function': campaign_callback, 'signal': 'campaign'}])
    enroll = lab.collect(range(4), QueryProtocol(n_repeats=20), workers=2)

    print("Glitch check passed: {}".format(lab.glitch_check(enroll).passed))
    report = lab.metrics(enroll)
    print("t_opt: stage {}, mu_intra {:.4f}, mu_inter {:.4f}".format(
        report.t_opt_stage, report.intra_spread['mean'], report.inter_spread['mean']))

    estimate = lab.entropy(enroll, report.t_opt_stage, ('min', 'joint'))
    print("H_min {:.2f} bits, H_joint {:.2f} bits".format(estimate.h_min, estimate.h_joint))

    # Physics parameters can be changed between campaigns.
    lab.set_config(**{'sigma_noise': 0.0})
    mask = lab.cherry_pick(enroll, stage=report.t_opt_stage)
    print("Stable bits per chip: {}".format(mask.stable_bits()))

    for result in lab.sensitivity(1, report.t_opt_stage, [0, 'xor'], exact=True):
        print("{}: AS {:.3f}, NS {:.3f}".format(result.target, result.average_sensitivity,
                                                result.noise_sensitivity))

    lab.export_hdl(enroll.manifest_hash()).save('hbn')

if __name__ == '__main__':
    main()
